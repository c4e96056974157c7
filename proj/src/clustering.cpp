#include "bcsfl/clustering.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "bcsfl/rng.hpp"

namespace bcsfl {

bool ClusterLayout::is_head(UavId u) const {
    return std::find(heads.begin(), heads.end(), u) != heads.end();
}

std::vector<UavId> ClusterLayout::members_of(int cluster) const {
    std::vector<UavId> out;
    for (UavId u = 0; u < static_cast<UavId>(assignment.size()); ++u) {
        if (assignment[u] == cluster) {
            out.push_back(u);
        }
    }
    return out;
}

std::vector<UavId> ClusterLayout::training_members_of(int cluster) const {
    std::vector<UavId> out;
    for (UavId u : members_of(cluster)) {
        if (u != heads[cluster]) {
            out.push_back(u);
        }
    }
    return out;
}

namespace {

int nearest_centroid(const Position& p, const std::vector<Position>& centroids) {
    int best = 0;
    double best_sq = squared_distance(p, centroids[0]);
    for (int c = 1; c < static_cast<int>(centroids.size()); ++c) {
        const double d = squared_distance(p, centroids[c]);
        if (d < best_sq) {
            best_sq = d;
            best = c;
        }
    }
    return best;
}

// k-means++ seeding: first centroid uniform, each next one D^2-weighted.
std::vector<Position> seed_centroids(const std::vector<Position>& positions,
                                     int num_clusters, Rng& rng) {
    const int n = static_cast<int>(positions.size());
    std::vector<Position> centroids;
    centroids.reserve(num_clusters);
    std::vector<char> chosen(n, 0);

    const int first = static_cast<int>(rng.below(n));
    centroids.push_back(positions[first]);
    chosen[first] = 1;

    std::vector<double> dist_sq(n);
    while (static_cast<int>(centroids.size()) < num_clusters) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double d = std::numeric_limits<double>::infinity();
            for (const auto& c : centroids) {
                d = std::min(d, squared_distance(positions[i], c));
            }
            dist_sq[i] = chosen[i] ? 0.0 : d;
            total += dist_sq[i];
        }
        int pick = -1;
        if (total > 0.0) {
            const double target = rng.next_double() * total;
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                acc += dist_sq[i];
                if (acc >= target && !chosen[i]) {
                    pick = i;
                    break;
                }
            }
        }
        if (pick < 0) {
            // All remaining points coincide with chosen centroids; fall back
            // to the first unchosen index.
            for (int i = 0; i < n; ++i) {
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.push_back(positions[pick]);
        chosen[pick] = 1;
    }
    return centroids;
}

}  // namespace

KmeansResult kmeans(const std::vector<Position>& positions, int num_clusters,
                    std::uint64_t seed, int max_iters) {
    const int n = static_cast<int>(positions.size());
    if (num_clusters < 1 || num_clusters > n) {
        throw std::invalid_argument("kmeans: need 1 <= Q <= number of points");
    }
    Rng rng(seed);
    std::vector<Position> centroids = seed_centroids(positions, num_clusters, rng);
    std::vector<int> assignment(n, -1);

    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            const int c = nearest_centroid(positions[i], centroids);
            if (c != assignment[i]) {
                assignment[i] = c;
                changed = true;
            }
        }

        // Empty-cluster repair: donate the point farthest from its centroid.
        for (int c = 0; c < num_clusters; ++c) {
            if (std::find(assignment.begin(), assignment.end(), c) != assignment.end()) {
                continue;
            }
            int worst = -1;
            double worst_sq = -1.0;
            for (int i = 0; i < n; ++i) {
                // Only take from clusters that keep at least two members.
                const int owner = assignment[i];
                if (std::count(assignment.begin(), assignment.end(), owner) < 2) {
                    continue;
                }
                const double d = squared_distance(positions[i], centroids[owner]);
                if (d > worst_sq) {
                    worst_sq = d;
                    worst = i;
                }
            }
            assignment[worst] = c;
            centroids[c] = positions[worst];
            changed = true;
        }

        std::vector<Position> sums(num_clusters, Position{0.0, 0.0});
        std::vector<int> counts(num_clusters, 0);
        for (int i = 0; i < n; ++i) {
            sums[assignment[i]].x += positions[i].x;
            sums[assignment[i]].y += positions[i].y;
            counts[assignment[i]] += 1;
        }
        for (int c = 0; c < num_clusters; ++c) {
            centroids[c] = {sums[c].x / counts[c], sums[c].y / counts[c]};
        }

        if (!changed) {
            break;
        }
    }
    return {std::move(assignment), std::move(centroids)};
}

std::vector<UavId> select_heads(const std::vector<Position>& positions,
                                const std::vector<int>& assignment,
                                const std::vector<Position>& centroids) {
    const int q = static_cast<int>(centroids.size());
    std::vector<UavId> heads(q, -1);
    std::vector<double> best_sq(q, std::numeric_limits<double>::infinity());
    // Ascending id with strict < keeps the smallest id on exact ties.
    for (UavId u = 0; u < static_cast<UavId>(positions.size()); ++u) {
        const int c = assignment[u];
        const double d = squared_distance(positions[u], centroids[c]);
        if (d < best_sq[c]) {
            best_sq[c] = d;
            heads[c] = u;
        }
    }
    for (int c = 0; c < q; ++c) {
        if (heads[c] < 0) {
            throw std::logic_error("select_heads: empty cluster");
        }
    }
    return heads;
}

std::vector<std::vector<char>> build_ch_graph(const std::vector<UavId>& heads,
                                              const std::vector<Position>& positions,
                                              double sigma) {
    if (sigma <= 0.0) {
        throw std::invalid_argument("build_ch_graph: sigma must be positive");
    }
    const int q = static_cast<int>(heads.size());
    const double sigma_sq = sigma * sigma;
    std::vector<std::vector<char>> adj(q, std::vector<char>(q, 0));
    for (int a = 0; a < q; ++a) {
        for (int b = a + 1; b < q; ++b) {
            if (squared_distance(positions[heads[a]], positions[heads[b]]) <= sigma_sq) {
                adj[a][b] = 1;
                adj[b][a] = 1;
            }
        }
    }
    return adj;
}

bool layout_feasible(const std::vector<Position>& positions, const ClusterLayout& layout) {
    const double sigma_sq = layout.sigma * layout.sigma;
    for (UavId u = 0; u < static_cast<UavId>(positions.size()); ++u) {
        const UavId head = layout.heads[layout.assignment[u]];
        if (squared_distance(positions[u], positions[head]) > sigma_sq) {
            return false;
        }
    }
    return is_connected_adjacency(layout.ch_adjacency);
}

ClusterLayout layout_for_q(const std::vector<Position>& positions, int num_clusters,
                           double sigma, std::uint64_t seed) {
    ClusterLayout layout;
    layout.num_clusters = num_clusters;
    layout.sigma = sigma;
    KmeansResult km = kmeans(positions, num_clusters,
                             derive_seed(seed, "kmeans", static_cast<std::uint64_t>(num_clusters)));
    layout.assignment = std::move(km.assignment);
    layout.centroids = std::move(km.centroids);
    layout.heads = select_heads(positions, layout.assignment, layout.centroids);
    layout.ch_adjacency = build_ch_graph(layout.heads, positions, sigma);
    return layout;
}

ClusterLayout cluster_swarm(const Topology& topology, const SwarmConfig& config) {
    const double sigma = config.sigma();
    if (sigma <= 0.0) {
        throw std::invalid_argument("cluster_swarm: sigma must be positive");
    }
    if (!is_connected(topology)) {
        throw std::invalid_argument("cluster_swarm: topology must be connected");
    }
    const int n = topology.size();
    for (int q = 1; q <= n; ++q) {
        ClusterLayout layout = layout_for_q(topology.positions, q, sigma, config.rng_seed);
        if (layout_feasible(topology.positions, layout)) {
            return layout;
        }
    }
    std::ostringstream msg;
    msg << "unclusterable under sigma: no Q in 1.." << n
        << " yields a feasible cluster-head graph (sigma " << sigma << " m)";
    throw std::runtime_error(msg.str());
}

}  // namespace bcsfl
