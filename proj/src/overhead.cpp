#include "bcsfl/overhead.hpp"

#include <stdexcept>

#include "bcsfl/rng.hpp"

namespace bcsfl {

std::string to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::kConventional: return "conventional";
        case Scheme::kFca: return "fca";
        case Scheme::kKha: return "kha";
    }
    throw std::logic_error("unknown scheme");
}

Scheme scheme_from_string(const std::string& name) {
    if (name == "conventional") return Scheme::kConventional;
    if (name == "fca") return Scheme::kFca;
    if (name == "kha") return Scheme::kKha;
    throw std::invalid_argument("unknown scheme '" + name +
                                "' (expected conventional|fca|kha)");
}

MessageCount count_conventional(const Topology& topology, UavId aggregator) {
    const int n = topology.size();
    if (aggregator < 0 || aggregator >= n) {
        throw std::out_of_range("count_conventional: invalid aggregator id");
    }
    const std::vector<int> hops = bfs_hops(topology.adjacency, aggregator);
    MessageCount count;
    for (int u = 0; u < n; ++u) {
        if (u == aggregator) {
            continue;
        }
        if (hops[u] < 0) {
            throw std::runtime_error("count_conventional: UAV " + std::to_string(u) +
                                     " unreachable from aggregator");
        }
        count.inter_cluster += 2LL * hops[u];
    }
    return count;
}

long long count_intra(const Topology& topology, const ClusterLayout& layout) {
    long long total = 0;
    for (int q = 0; q < layout.num_clusters; ++q) {
        const std::vector<int> hops = bfs_hops(topology.adjacency, layout.heads[q]);
        for (UavId u : layout.training_members_of(q)) {
            if (hops[u] < 0) {
                throw std::runtime_error("count_intra: member " + std::to_string(u) +
                                         " unreachable from its cluster head");
            }
            total += 2LL * hops[u];
        }
    }
    return total;
}

long long count_fca(const std::vector<std::vector<char>>& ch_graph,
                    const std::vector<UavId>& heads, int aggregator_ch) {
    const int q = static_cast<int>(heads.size());
    if (aggregator_ch < 0 || aggregator_ch >= q) {
        throw std::out_of_range("count_fca: invalid aggregator cluster index");
    }
    const std::vector<int> hops = bfs_hops(ch_graph, aggregator_ch);
    long long total = 0;
    for (int c = 0; c < q; ++c) {
        if (c == aggregator_ch) {
            continue;
        }
        if (hops[c] < 0) {
            throw std::runtime_error("count_fca: CH graph not connected");
        }
        total += 2LL * hops[c];
    }
    return total;
}

long long count_kha(const std::vector<std::vector<char>>& ch_graph, int k) {
    if (k < 1) {
        throw std::invalid_argument("count_kha: k must be >= 1");
    }
    const int q = static_cast<int>(ch_graph.size());
    long long total = 0;
    for (int c = 0; c < q; ++c) {
        const std::vector<int> hops = bfs_hops(ch_graph, c);
        for (int other = 0; other < q; ++other) {
            if (other != c && hops[other] >= 0 && hops[other] <= k) {
                total += 1;
            }
        }
    }
    return total;
}

MessageCount count_round(Scheme scheme, int k, const Topology& topology,
                         const ClusterLayout& layout, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "aggregator"));
    MessageCount count;
    switch (scheme) {
        case Scheme::kConventional: {
            const UavId aggregator = static_cast<UavId>(rng.below(topology.size()));
            return count_conventional(topology, aggregator);
        }
        case Scheme::kFca: {
            const int aggregator_ch = static_cast<int>(rng.below(layout.num_clusters));
            count.intra_cluster = count_intra(topology, layout);
            count.inter_cluster = count_fca(layout.ch_adjacency, layout.heads, aggregator_ch);
            return count;
        }
        case Scheme::kKha: {
            count.intra_cluster = count_intra(topology, layout);
            count.inter_cluster = count_kha(layout.ch_adjacency, k);
            return count;
        }
    }
    throw std::logic_error("unknown scheme");
}

}  // namespace bcsfl
