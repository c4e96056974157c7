#include "bcsfl/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "bcsfl/rng.hpp"

namespace bcsfl {

void SwarmConfig::validate() const {
    if (num_uavs < 2) {
        throw std::invalid_argument("SwarmConfig: num_uavs must be >= 2");
    }
    if (area_width <= 0.0 || area_height <= 0.0) {
        throw std::invalid_argument("SwarmConfig: area dimensions must be positive");
    }
    if (comm_range <= 2.0 * max_drift) {
        throw std::invalid_argument(
            "SwarmConfig: comm_range must exceed 2*max_drift (sigma would be <= 0)");
    }
    if (max_drift < 0.0) {
        throw std::invalid_argument("SwarmConfig: max_drift must be non-negative");
    }
}

double distance(const Position& a, const Position& b) {
    return std::sqrt(squared_distance(a, b));
}

std::vector<std::vector<char>> build_adjacency(const std::vector<Position>& positions,
                                               double comm_range) {
    const int n = static_cast<int>(positions.size());
    const double range_sq = comm_range * comm_range;
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            if (squared_distance(positions[u], positions[v]) <= range_sq) {
                adj[u][v] = 1;
                adj[v][u] = 1;
            }
        }
    }
    return adj;
}

std::vector<int> bfs_hops(const std::vector<std::vector<char>>& adjacency, int src) {
    const int n = static_cast<int>(adjacency.size());
    std::vector<int> hops(n, -1);
    std::queue<int> frontier;
    hops[src] = 0;
    frontier.push(src);
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop();
        for (int v = 0; v < n; ++v) {
            if (adjacency[u][v] && hops[v] < 0) {
                hops[v] = hops[u] + 1;
                frontier.push(v);
            }
        }
    }
    return hops;
}

bool is_connected_adjacency(const std::vector<std::vector<char>>& adjacency) {
    if (adjacency.empty()) {
        return true;
    }
    const std::vector<int> hops = bfs_hops(adjacency, 0);
    return std::none_of(hops.begin(), hops.end(), [](int h) { return h < 0; });
}

bool is_connected(const Topology& topology) {
    return is_connected_adjacency(topology.adjacency);
}

Topology deploy_swarm(const SwarmConfig& config) {
    config.validate();
    constexpr int kRetryCap = 1000;
    Rng rng(config.rng_seed);
    for (int attempt = 0; attempt < kRetryCap; ++attempt) {
        std::vector<Position> positions(config.num_uavs);
        for (auto& p : positions) {
            p.x = rng.uniform(0.0, config.area_width);
            p.y = rng.uniform(0.0, config.area_height);
        }
        Topology topo;
        topo.config = config;
        topo.positions = positions;
        topo.home_positions = positions;
        topo.adjacency = build_adjacency(positions, config.comm_range);
        if (is_connected(topo)) {
            return topo;
        }
    }
    std::ostringstream msg;
    msg << "infeasible density: no connected layout for " << config.num_uavs
        << " UAVs in " << config.area_width << "x" << config.area_height
        << " m area with comm_range " << config.comm_range << " m after "
        << kRetryCap << " attempts";
    throw std::runtime_error(msg.str());
}

namespace {

// Uniform offset inside the closed disk of the given radius (rejection in
// the bounding square).
Position disk_offset(Rng& rng, double radius) {
    if (radius == 0.0) {
        return {0.0, 0.0};
    }
    const double r_sq = radius * radius;
    for (;;) {
        const double dx = rng.uniform(-radius, radius);
        const double dy = rng.uniform(-radius, radius);
        if (dx * dx + dy * dy <= r_sq) {
            return {dx, dy};
        }
    }
}

}  // namespace

Topology apply_drift(const Topology& topology, int round, std::uint64_t rng_seed) {
    if (round < 1) {
        throw std::invalid_argument("apply_drift: round must be >= 1");
    }
    const SwarmConfig& cfg = topology.config;
    Rng rng(derive_seed(rng_seed, "drift", static_cast<std::uint64_t>(round)));
    Topology out = topology;
    for (int u = 0; u < topology.size(); ++u) {
        const Position off = disk_offset(rng, cfg.max_drift);
        Position p{topology.home_positions[u].x + off.x,
                   topology.home_positions[u].y + off.y};
        // Clamping projects onto the (convex) area, which can only shrink the
        // distance to the in-area home position, so the drift bound holds.
        p.x = std::clamp(p.x, 0.0, cfg.area_width);
        p.y = std::clamp(p.y, 0.0, cfg.area_height);
        out.positions[u] = p;
    }
    out.adjacency = build_adjacency(out.positions, cfg.comm_range);
    return out;
}

std::optional<int> shortest_path_hops(const Topology& topology, UavId src, UavId dst) {
    const int n = topology.size();
    if (src < 0 || src >= n || dst < 0 || dst >= n) {
        throw std::out_of_range("shortest_path_hops: invalid UAV id");
    }
    if (src == dst) {
        return 0;
    }
    const std::vector<int> hops = bfs_hops(topology.adjacency, src);
    if (hops[dst] < 0) {
        return std::nullopt;
    }
    return hops[dst];
}

}  // namespace bcsfl
