#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace bcsfl {

using UavId = int;

struct SwarmConfig {
    int num_uavs = 0;
    double area_width = 0.0;   // meters
    double area_height = 0.0;  // meters
    double comm_range = 0.0;   // R_max^com, meters
    double max_drift = 0.0;    // delta_max, meters
    std::uint64_t rng_seed = 0;

    // sigma = R_max^com - 2*delta_max; CH links formed under sigma survive
    // any bounded drift of both endpoints.
    double sigma() const { return comm_range - 2.0 * max_drift; }

    // Throws std::invalid_argument on violated invariants.
    void validate() const;
};

struct Position {
    double x = 0.0;
    double y = 0.0;
};

inline double squared_distance(const Position& a, const Position& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

double distance(const Position& a, const Position& b);

// The swarm's random geometric graph: positions plus a dense symmetric
// adjacency under the communication range. Links use the closed ball
// (distance exactly comm_range counts as linked), compared on squared
// distances so there is no float-ordering ambiguity.
struct Topology {
    SwarmConfig config;
    std::vector<Position> positions;
    std::vector<Position> home_positions;        // p_u^0
    std::vector<std::vector<char>> adjacency;    // U x U, symmetric, irreflexive

    int size() const { return static_cast<int>(positions.size()); }
    bool linked(UavId u, UavId v) const { return adjacency[u][v] != 0; }
};

// Recompute the adjacency relation from positions and comm_range.
std::vector<std::vector<char>> build_adjacency(const std::vector<Position>& positions,
                                               double comm_range);

// Sample positions uniformly in the area until the communication graph is
// connected (whole-layout rejection, retry cap 1000). Deterministic per seed.
// Throws std::runtime_error("infeasible density ...") when the cap is hit.
Topology deploy_swarm(const SwarmConfig& config);

// True iff one traversal from node 0 reaches all nodes.
bool is_connected(const Topology& topology);

// Connectivity over an arbitrary adjacency matrix (used for CH graphs too).
bool is_connected_adjacency(const std::vector<std::vector<char>>& adjacency);

// Re-position every UAV at its home position plus a uniform-in-disk offset
// of norm <= max_drift, clamped to the area, and rebuild adjacency.
// Deterministic given (rng_seed, round).
Topology apply_drift(const Topology& topology, int round, std::uint64_t rng_seed);

// Minimum hop count between src and dst via BFS; nullopt when unreachable.
std::optional<int> shortest_path_hops(const Topology& topology, UavId src, UavId dst);

// BFS hop counts from src to every node over an adjacency matrix; -1 marks
// unreachable nodes.
std::vector<int> bfs_hops(const std::vector<std::vector<char>>& adjacency, int src);

}  // namespace bcsfl
