#include "bcsfl/aggregation.hpp"

#include <algorithm>
#include <stdexcept>

#include "bcsfl/rng.hpp"

namespace bcsfl {

RoundState RoundState::initial(const ModelVector& model, int num_slots) {
    if (num_slots < 1) {
        throw std::invalid_argument("RoundState: need at least one broadcast slot");
    }
    RoundState state;
    state.distributed.assign(num_slots, model);
    return state;
}

std::vector<ModelVector> intra_cluster_aggregate(
    const ClusterLayout& layout, const std::vector<std::size_t>& shard_sizes,
    const std::vector<ModelVector>& uav_models,
    const std::vector<ModelVector>& previous_distributed, int* carried_clusters) {
    std::vector<ModelVector> cluster_models(layout.num_clusters);
    if (carried_clusters != nullptr) {
        *carried_clusters = 0;
    }
    for (int q = 0; q < layout.num_clusters; ++q) {
        std::vector<ModelVector> members;
        std::vector<std::size_t> sizes;
        for (UavId u : layout.training_members_of(q)) {
            if (shard_sizes[u] == 0) {
                continue;
            }
            members.push_back(uav_models[u]);
            sizes.push_back(shard_sizes[u]);
        }
        if (members.empty()) {
            cluster_models[q] = previous_distributed[q];
            if (carried_clusters != nullptr) {
                ++*carried_clusters;
            }
            continue;
        }
        cluster_models[q] = fedavg(members, size_weights(sizes));
    }
    return cluster_models;
}

FcaResult fca(const std::vector<ModelVector>& cluster_models, std::uint64_t rng_seed) {
    if (cluster_models.empty()) {
        throw std::invalid_argument("fca: need at least one cluster model");
    }
    const std::size_t q = cluster_models.size();
    FcaResult result;
    Rng rng(derive_seed(rng_seed, "aggregator"));
    result.aggregator_ch = static_cast<int>(rng.below(q));
    const std::vector<double> uniform(q, 1.0 / static_cast<double>(q));
    result.global_model = fedavg(cluster_models, uniform);
    return result;
}

std::vector<ModelVector> kha(const std::vector<std::vector<char>>& ch_graph,
                             const std::vector<ModelVector>& cluster_models, int k) {
    if (k < 1) {
        throw std::invalid_argument("kha: k must be >= 1");
    }
    const int q = static_cast<int>(cluster_models.size());
    if (static_cast<int>(ch_graph.size()) != q) {
        throw std::invalid_argument("kha: graph/model count mismatch");
    }
    std::vector<ModelVector> out(q);
    for (int c = 0; c < q; ++c) {
        const std::vector<int> hops = bfs_hops(ch_graph, c);
        std::vector<ModelVector> neighborhood;
        for (int other = 0; other < q; ++other) {
            if (hops[other] >= 0 && hops[other] <= k) {
                neighborhood.push_back(cluster_models[other]);
            }
        }
        const std::vector<double> uniform(neighborhood.size(),
                                          1.0 / static_cast<double>(neighborhood.size()));
        out[c] = fedavg(neighborhood, uniform);
    }
    return out;
}

namespace {

// CH broadcast models can coincide (always under FCA); evaluate each
// distinct vector once.
void evaluate_distributed(const TaskSpec& task, const std::vector<ModelVector>& models,
                          const Dataset& eval_set, RoundMetrics* metrics) {
    std::vector<EvalResult> results;
    results.reserve(models.size());
    for (const ModelVector& m : models) {
        int seen_before = -1;
        for (std::size_t i = 0; i < results.size(); ++i) {
            if (models[i] == m) {
                seen_before = static_cast<int>(i);
                break;
            }
        }
        results.push_back(seen_before >= 0 ? results[seen_before]
                                           : evaluate(task, m, eval_set));
    }
    double acc_sum = 0.0;
    double loss_sum = 0.0;
    metrics->acc_min = results.front().accuracy;
    metrics->acc_max = results.front().accuracy;
    for (const EvalResult& r : results) {
        acc_sum += r.accuracy;
        loss_sum += r.loss;
        metrics->acc_min = std::min(metrics->acc_min, r.accuracy);
        metrics->acc_max = std::max(metrics->acc_max, r.accuracy);
    }
    metrics->acc_mean = acc_sum / static_cast<double>(results.size());
    metrics->loss_mean = loss_sum / static_cast<double>(results.size());
}

}  // namespace

RoundResult run_round(const TaskSpec& task, const ClusterLayout& layout,
                      const Topology& topology,
                      const std::vector<DatasetShard>& shards,
                      const RoundState& state, const RoundOptions& options,
                      const Dataset& eval_set, std::uint64_t seed) {
    const int num_uavs = topology.size();
    const int round = state.round + 1;

    // Dense per-UAV shard index.
    std::vector<const Dataset*> shard_of(num_uavs, nullptr);
    std::vector<std::size_t> shard_sizes(num_uavs, 0);
    for (const DatasetShard& s : shards) {
        if (s.owner < 0 || s.owner >= num_uavs) {
            throw std::invalid_argument("run_round: shard owner out of range");
        }
        shard_of[s.owner] = &s.samples;
        shard_sizes[s.owner] = s.samples.size();
    }

    const bool conventional = options.scheme == Scheme::kConventional;
    if (!conventional &&
        static_cast<int>(state.distributed.size()) != layout.num_clusters) {
        throw std::invalid_argument("run_round: state has wrong broadcast slot count");
    }
    if (conventional && state.distributed.size() != 1) {
        throw std::invalid_argument("run_round: conventional state needs one global slot");
    }

    RoundResult result;
    result.state.round = round;
    result.metrics.round = round;
    result.metrics.scheme = options.scheme;
    result.metrics.k = options.scheme == Scheme::kKha ? options.k : 0;
    result.metrics.num_clusters = conventional ? 0 : layout.num_clusters;

    // Steps 1-2: every training UAV starts from its broadcast model and runs
    // one epoch of local SGD.
    result.state.uav_models.assign(num_uavs, ModelVector{});
    for (UavId u = 0; u < num_uavs; ++u) {
        if (shard_of[u] == nullptr || shard_of[u]->empty()) {
            continue;
        }
        const ModelVector& start =
            conventional ? state.distributed[0]
                         : state.distributed[layout.assignment[u]];
        result.state.uav_models[u] =
            local_sgd(task, start, *shard_of[u], options.lr, options.batch_size,
                      derive_seed(seed, "sgd", static_cast<std::uint64_t>(round),
                                  static_cast<std::uint64_t>(u)));
    }

    if (conventional) {
        // Single FedAvg over all training UAVs at a randomly picked
        // aggregator UAV; the aggregator's identity only affects routing.
        Rng agg_rng(derive_seed(seed, "aggregator"));
        const UavId aggregator = static_cast<UavId>(agg_rng.below(num_uavs));
        std::vector<ModelVector> models;
        std::vector<std::size_t> sizes;
        for (UavId u = 0; u < num_uavs; ++u) {
            if (!result.state.uav_models[u].empty()) {
                models.push_back(result.state.uav_models[u]);
                sizes.push_back(shard_sizes[u]);
            }
        }
        if (models.empty()) {
            throw std::invalid_argument("run_round: no training UAV holds data");
        }
        result.state.distributed = {fedavg(models, size_weights(sizes))};
        result.metrics.messages = count_conventional(topology, aggregator);
    } else {
        // Step 3: intra-cluster aggregation.
        result.state.cluster_models = intra_cluster_aggregate(
            layout, shard_sizes, result.state.uav_models, state.distributed,
            &result.metrics.carried_clusters);

        // Step 4: inter-cluster aggregation plus message accounting.
        result.metrics.messages.intra_cluster = count_intra(topology, layout);
        if (options.scheme == Scheme::kFca) {
            const FcaResult agg = fca(result.state.cluster_models, seed);
            result.state.distributed.assign(layout.num_clusters, agg.global_model);
            result.metrics.messages.inter_cluster =
                count_fca(layout.ch_adjacency, layout.heads, agg.aggregator_ch);
        } else {
            result.state.distributed =
                kha(layout.ch_adjacency, result.state.cluster_models, options.k);
            result.metrics.messages.inter_cluster =
                count_kha(layout.ch_adjacency, options.k);
        }
    }

    // Step 5: evaluation of what the CHs will broadcast next round.
    evaluate_distributed(task, result.state.distributed, eval_set, &result.metrics);
    return result;
}

}  // namespace bcsfl
