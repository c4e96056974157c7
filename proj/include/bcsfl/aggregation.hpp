#pragma once

#include <cstdint>
#include <vector>

#include "bcsfl/clustering.hpp"
#include "bcsfl/flcore.hpp"
#include "bcsfl/overhead.hpp"
#include "bcsfl/topology.hpp"

namespace bcsfl {

// Per-round model state carried between rounds. For the clustered schemes
// `distributed` holds one model per CH (what each CH broadcasts at round
// start); for the conventional baseline it holds the single global model.
struct RoundState {
    int round = 0;  // rounds completed
    std::vector<ModelVector> uav_models;      // last local models (training UAVs)
    std::vector<ModelVector> cluster_models;  // l_q^d
    std::vector<ModelVector> distributed;

    // Fresh state with every broadcast slot holding the initial model.
    static RoundState initial(const ModelVector& model, int num_slots);
};

struct RoundOptions {
    Scheme scheme = Scheme::kFca;
    int k = 0;  // kHA only
    double lr = 0.01;
    int batch_size = 10;
};

struct RoundMetrics {
    int round = 0;
    Scheme scheme = Scheme::kFca;
    int k = 0;
    int num_clusters = 0;
    double acc_mean = 0.0;
    double loss_mean = 0.0;
    double acc_min = 0.0;
    double acc_max = 0.0;
    MessageCount messages;
    int carried_clusters = 0;  // clusters with no training data this round
};

// l_q^d = FedAvg over cluster q's training members, data-size weighted.
// A cluster with no training data carries its broadcast model forward and
// is counted in carried_clusters.
std::vector<ModelVector> intra_cluster_aggregate(
    const ClusterLayout& layout, const std::vector<std::size_t>& shard_sizes,
    const std::vector<ModelVector>& uav_models,
    const std::vector<ModelVector>& previous_distributed, int* carried_clusters);

struct FcaResult {
    ModelVector global_model;
    int aggregator_ch = 0;
};

// Uniform average of the cluster models (one share per cluster regardless
// of data volume); the receiving CH is drawn uniformly from the seed.
FcaResult fca(const std::vector<ModelVector>& cluster_models, std::uint64_t rng_seed);

// Each CH averages the cluster models of its inclusive k-hop neighborhood
// on the CH graph, ascending cluster index.
std::vector<ModelVector> kha(const std::vector<std::vector<char>>& ch_graph,
                             const std::vector<ModelVector>& cluster_models, int k);

// One full training round: broadcast, local SGD, intra-cluster aggregation,
// inter-cluster aggregation per scheme, evaluation + message accounting.
struct RoundResult {
    RoundState state;
    RoundMetrics metrics;
};
RoundResult run_round(const TaskSpec& task, const ClusterLayout& layout,
                      const Topology& topology,
                      const std::vector<DatasetShard>& shards,
                      const RoundState& state, const RoundOptions& options,
                      const Dataset& eval_set, std::uint64_t seed);

}  // namespace bcsfl
