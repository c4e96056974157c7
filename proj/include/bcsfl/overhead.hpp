#pragma once

#include <cstdint>
#include <string>

#include "bcsfl/clustering.hpp"
#include "bcsfl/topology.hpp"

namespace bcsfl {

enum class Scheme { kConventional, kFca, kKha };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

// Hop-weighted message tally: one exchange = one model copy traversing one
// communication-graph edge. Uploads and the returned global model both
// count (factor 2 on shortest-path hops).
struct MessageCount {
    long long intra_cluster = 0;
    long long inter_cluster = 0;

    long long total() const { return intra_cluster + inter_cluster; }
};

// Conventional FL: every other UAV uploads to the aggregator and receives
// the global model back over shortest paths in the full graph.
MessageCount count_conventional(const Topology& topology, UavId aggregator);

// Per cluster: 2 * hops(member, head) for each training member, routed
// through the full communication graph (relays through non-members allowed).
long long count_intra(const Topology& topology, const ClusterLayout& layout);

// FCA: every other CH uploads to the selected aggregator CH and receives
// the global model back, over CH-graph shortest paths.
long long count_fca(const std::vector<std::vector<char>>& ch_graph,
                    const std::vector<UavId>& heads, int aggregator_ch);

// kHA: each CH floods its cluster model along its BFS tree truncated at
// depth k; one delivery per reached CH, so sum of (|N_k(c)| - 1).
long long count_kha(const std::vector<std::vector<char>>& ch_graph, int k);

// Composition per scheme; the aggregator (UAV or CH) is drawn uniformly
// from the seed.
MessageCount count_round(Scheme scheme, int k, const Topology& topology,
                         const ClusterLayout& layout, std::uint64_t seed);

}  // namespace bcsfl
