#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bcsfl/topology.hpp"

namespace bcsfl {

// Flat parameter vector; the unit of all aggregation.
using ModelVector = std::vector<double>;

struct Sample {
    std::vector<double> features;
    int label = 0;
};

using Dataset = std::vector<Sample>;

struct DatasetShard {
    UavId owner = -1;
    Dataset samples;
};

enum class ModelKind { kLogistic, kMlp };

// Task definition. Layouts of the flat model vector:
//   logistic: W[C][D], b[C]
//   mlp:      W1[H][D], b1[H], W2[C][H], b2[C]   (tanh hidden activation)
struct TaskSpec {
    ModelKind kind = ModelKind::kLogistic;
    int input_dim = 0;
    int hidden_dim = 0;  // MLP only
    int num_classes = 0;

    std::size_t model_dim() const;
    void validate() const;
};

// Zero weights for logistic (convex); seeded Gaussian init for the MLP
// (zero init would freeze the hidden layer by symmetry).
ModelVector init_model(const TaskSpec& task, std::uint64_t seed);

// Class logits for one sample.
std::vector<double> logits(const TaskSpec& task, const ModelVector& model,
                           std::span<const double> features);

// Mean cross-entropy over the shard. Throws on an empty shard.
double local_objective(const TaskSpec& task, const ModelVector& model,
                       const Dataset& shard);

// Weighted sum of local objectives; weights must sum to 1 within 1e-12.
double global_objective(const TaskSpec& task, const ModelVector& model,
                        const std::vector<Dataset>& shards,
                        const std::vector<double>& weights);

// Analytic gradient of the mean batch loss.
ModelVector gradient(const TaskSpec& task, const ModelVector& model,
                     const Dataset& batch);

// One epoch of mini-batch SGD over a seed-deterministic shuffle of the
// shard; the final short batch is included.
ModelVector local_sgd(const TaskSpec& task, const ModelVector& model,
                      const Dataset& shard, double lr, int batch_size,
                      std::uint64_t rng_seed);

// Coordinate-wise weighted average, consumed in the order given (callers
// pass ascending UavId). Checks dimensions and the weight sum.
ModelVector fedavg(const std::vector<ModelVector>& models,
                   const std::vector<double>& weights);

// Size-proportional weights |R_u| / sum |R_u|.
std::vector<double> size_weights(const std::vector<std::size_t>& sizes);

// Seed-deterministic shuffle, then near-equal contiguous split (sizes
// differ by at most one; earlier shards take the extras).
std::vector<DatasetShard> partition_iid(const Dataset& dataset,
                                        const std::vector<UavId>& uav_ids,
                                        std::uint64_t rng_seed);

// Label-sorted shard deal: sort by label, cut into
// |uav_ids| * shards_per_uav near-equal contiguous label-shards, deal
// shards_per_uav of them to each UAV via a seed-deterministic permutation.
std::vector<DatasetShard> partition_noniid(const Dataset& dataset,
                                           const std::vector<UavId>& uav_ids,
                                           int shards_per_uav,
                                           std::uint64_t rng_seed);

// Top-1 accuracy (argmax ties go to the lowest class index) and mean loss.
struct EvalResult {
    double accuracy = 0.0;
    double loss = 0.0;
};
EvalResult evaluate(const TaskSpec& task, const ModelVector& model,
                    const Dataset& eval_set);

}  // namespace bcsfl
