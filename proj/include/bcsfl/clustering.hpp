#pragma once

#include <cstdint>
#include <vector>

#include "bcsfl/topology.hpp"

namespace bcsfl {

// Output of the iterative clustering phase: a partition of the swarm, one
// cluster head (CH) per cluster, and the CH-to-CH adjacency under sigma.
struct ClusterLayout {
    int num_clusters = 0;                        // Q
    std::vector<int> assignment;                 // UavId -> cluster index
    std::vector<Position> centroids;             // size Q
    std::vector<UavId> heads;                    // size Q, heads[q] assigned to q
    std::vector<std::vector<char>> ch_adjacency; // Q x Q, linked iff dist <= sigma
    double sigma = 0.0;

    bool is_head(UavId u) const;
    std::vector<UavId> members_of(int cluster) const;
    // Cluster members excluding the head: the UAVs that train.
    std::vector<UavId> training_members_of(int cluster) const;
};

struct KmeansResult {
    std::vector<int> assignment;
    std::vector<Position> centroids;
};

// Lloyd's algorithm with k-means++ seeding. Guaranteed to return no empty
// cluster: an empty cluster is repaired by reassigning the point farthest
// from its current centroid. Terminates on stable assignments or max_iters.
KmeansResult kmeans(const std::vector<Position>& positions, int num_clusters,
                    std::uint64_t seed, int max_iters = 100);

// heads[q] = member of cluster q closest to centroid q, ties to smallest id.
std::vector<UavId> select_heads(const std::vector<Position>& positions,
                                const std::vector<int>& assignment,
                                const std::vector<Position>& centroids);

// CHs u, v linked iff distance <= sigma (closed ball).
std::vector<std::vector<char>> build_ch_graph(const std::vector<UavId>& heads,
                                              const std::vector<Position>& positions,
                                              double sigma);

// Whether a layout candidate is communication-feasible under sigma: every
// member within sigma of its head, and the CH graph connected. Both link
// kinds then survive bounded drift (sigma + 2*delta_max = comm_range).
bool layout_feasible(const std::vector<Position>& positions, const ClusterLayout& layout);

// Run kmeans + select_heads + build_ch_graph for one candidate Q.
ClusterLayout layout_for_q(const std::vector<Position>& positions, int num_clusters,
                           double sigma, std::uint64_t seed);

// Sweep Q = 1, 2, ... and return the first feasible layout. Deterministic
// given the config seed. Throws std::runtime_error("unclusterable under
// sigma ...") when Q reaches U without feasibility.
ClusterLayout cluster_swarm(const Topology& topology, const SwarmConfig& config);

}  // namespace bcsfl
