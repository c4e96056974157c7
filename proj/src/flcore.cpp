#include "bcsfl/flcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bcsfl/rng.hpp"

namespace bcsfl {

std::size_t TaskSpec::model_dim() const {
    switch (kind) {
        case ModelKind::kLogistic:
            return static_cast<std::size_t>(num_classes) * input_dim + num_classes;
        case ModelKind::kMlp:
            return static_cast<std::size_t>(hidden_dim) * input_dim + hidden_dim +
                   static_cast<std::size_t>(num_classes) * hidden_dim + num_classes;
    }
    throw std::logic_error("TaskSpec: unknown model kind");
}

void TaskSpec::validate() const {
    if (input_dim < 1 || num_classes < 2) {
        throw std::invalid_argument("TaskSpec: need input_dim >= 1, num_classes >= 2");
    }
    if (kind == ModelKind::kMlp && hidden_dim < 1) {
        throw std::invalid_argument("TaskSpec: MLP needs hidden_dim >= 1");
    }
}

ModelVector init_model(const TaskSpec& task, std::uint64_t seed) {
    task.validate();
    ModelVector model(task.model_dim(), 0.0);
    if (task.kind == ModelKind::kMlp) {
        Rng rng(seed);
        for (double& w : model) {
            w = 0.05 * rng.next_normal();
        }
    }
    return model;
}

namespace {

void check_sample(const TaskSpec& task, const Sample& s) {
    if (static_cast<int>(s.features.size()) != task.input_dim) {
        throw std::invalid_argument("sample feature dimension mismatch");
    }
    if (s.label < 0 || s.label >= task.num_classes) {
        throw std::invalid_argument("sample label out of range");
    }
}

// loss = logsumexp(z) - z_y, numerically stable and exact at the extremes.
double cross_entropy_from_logits(const std::vector<double>& z, int label) {
    const double z_max = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) {
        sum += std::exp(v - z_max);
    }
    return z_max + std::log(sum) - z[label];
}

std::vector<double> softmax_from_logits(const std::vector<double>& z) {
    const double z_max = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        p[k] = std::exp(z[k] - z_max);
        sum += p[k];
    }
    for (double& v : p) {
        v /= sum;
    }
    return p;
}

void check_finite(const ModelVector& model, const char* what) {
    for (double w : model) {
        if (!std::isfinite(w)) {
            throw std::runtime_error(std::string(what) + ": non-finite parameter");
        }
    }
}

}  // namespace

std::vector<double> logits(const TaskSpec& task, const ModelVector& model,
                           std::span<const double> features) {
    const int d = task.input_dim;
    const int c_out = task.num_classes;
    std::vector<double> z(c_out, 0.0);
    if (task.kind == ModelKind::kLogistic) {
        // model = W[C][D], b[C]
        const double* w = model.data();
        const double* b = model.data() + static_cast<std::size_t>(c_out) * d;
        for (int k = 0; k < c_out; ++k) {
            double acc = b[k];
            const double* wk = w + static_cast<std::size_t>(k) * d;
            for (int j = 0; j < d; ++j) {
                acc += wk[j] * features[j];
            }
            z[k] = acc;
        }
        return z;
    }
    // MLP: W1[H][D], b1[H], W2[C][H], b2[C]
    const int h = task.hidden_dim;
    const double* w1 = model.data();
    const double* b1 = w1 + static_cast<std::size_t>(h) * d;
    const double* w2 = b1 + h;
    const double* b2 = w2 + static_cast<std::size_t>(c_out) * h;
    std::vector<double> hidden(h);
    for (int i = 0; i < h; ++i) {
        double acc = b1[i];
        const double* row = w1 + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) {
            acc += row[j] * features[j];
        }
        hidden[i] = std::tanh(acc);
    }
    for (int k = 0; k < c_out; ++k) {
        double acc = b2[k];
        const double* row = w2 + static_cast<std::size_t>(k) * h;
        for (int i = 0; i < h; ++i) {
            acc += row[i] * hidden[i];
        }
        z[k] = acc;
    }
    return z;
}

double local_objective(const TaskSpec& task, const ModelVector& model,
                       const Dataset& shard) {
    if (shard.empty()) {
        throw std::invalid_argument("local_objective: empty shard");
    }
    check_finite(model, "local_objective");
    double total = 0.0;
    for (const Sample& s : shard) {
        check_sample(task, s);
        total += cross_entropy_from_logits(logits(task, model, s.features), s.label);
    }
    return total / static_cast<double>(shard.size());
}

double global_objective(const TaskSpec& task, const ModelVector& model,
                        const std::vector<Dataset>& shards,
                        const std::vector<double>& weights) {
    if (shards.size() != weights.size()) {
        throw std::invalid_argument("global_objective: shards/weights size mismatch");
    }
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-12) {
        throw std::invalid_argument("global_objective: weights must sum to 1");
    }
    double total = 0.0;
    for (std::size_t u = 0; u < shards.size(); ++u) {
        total += weights[u] * local_objective(task, model, shards[u]);
    }
    return total;
}

ModelVector gradient(const TaskSpec& task, const ModelVector& model,
                     const Dataset& batch) {
    if (batch.empty()) {
        throw std::invalid_argument("gradient: empty batch");
    }
    const int d = task.input_dim;
    const int c_out = task.num_classes;
    ModelVector grad(model.size(), 0.0);

    if (task.kind == ModelKind::kLogistic) {
        double* gw = grad.data();
        double* gb = grad.data() + static_cast<std::size_t>(c_out) * d;
        for (const Sample& s : batch) {
            check_sample(task, s);
            const std::vector<double> p =
                softmax_from_logits(logits(task, model, s.features));
            for (int k = 0; k < c_out; ++k) {
                const double residual = p[k] - (k == s.label ? 1.0 : 0.0);
                gb[k] += residual;
                double* row = gw + static_cast<std::size_t>(k) * d;
                for (int j = 0; j < d; ++j) {
                    row[j] += residual * s.features[j];
                }
            }
        }
    } else {
        const int h = task.hidden_dim;
        const double* w1 = model.data();
        const double* b1 = w1 + static_cast<std::size_t>(h) * d;
        const double* w2 = b1 + h;
        const double* b2 = w2 + static_cast<std::size_t>(c_out) * h;
        double* gw1 = grad.data();
        double* gb1 = gw1 + static_cast<std::size_t>(h) * d;
        double* gw2 = gb1 + h;
        double* gb2 = gw2 + static_cast<std::size_t>(c_out) * h;

        std::vector<double> hidden(h), z(c_out), dhidden(h);
        for (const Sample& s : batch) {
            check_sample(task, s);
            for (int i = 0; i < h; ++i) {
                double acc = b1[i];
                const double* row = w1 + static_cast<std::size_t>(i) * d;
                for (int j = 0; j < d; ++j) {
                    acc += row[j] * s.features[j];
                }
                hidden[i] = std::tanh(acc);
            }
            for (int k = 0; k < c_out; ++k) {
                double acc = b2[k];
                const double* row = w2 + static_cast<std::size_t>(k) * h;
                for (int i = 0; i < h; ++i) {
                    acc += row[i] * hidden[i];
                }
                z[k] = acc;
            }
            const std::vector<double> p = softmax_from_logits(z);
            std::fill(dhidden.begin(), dhidden.end(), 0.0);
            for (int k = 0; k < c_out; ++k) {
                const double residual = p[k] - (k == s.label ? 1.0 : 0.0);
                gb2[k] += residual;
                const double* w2row = w2 + static_cast<std::size_t>(k) * h;
                double* gw2row = gw2 + static_cast<std::size_t>(k) * h;
                for (int i = 0; i < h; ++i) {
                    gw2row[i] += residual * hidden[i];
                    dhidden[i] += residual * w2row[i];
                }
            }
            for (int i = 0; i < h; ++i) {
                const double da = dhidden[i] * (1.0 - hidden[i] * hidden[i]);
                gb1[i] += da;
                double* gw1row = gw1 + static_cast<std::size_t>(i) * d;
                for (int j = 0; j < d; ++j) {
                    gw1row[j] += da * s.features[j];
                }
            }
        }
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) {
        g *= inv;
    }
    check_finite(grad, "gradient");
    return grad;
}

ModelVector local_sgd(const TaskSpec& task, const ModelVector& model,
                      const Dataset& shard, double lr, int batch_size,
                      std::uint64_t rng_seed) {
    if (lr < 0.0) {
        throw std::invalid_argument("local_sgd: lr must be >= 0");
    }
    if (batch_size < 1) {
        throw std::invalid_argument("local_sgd: batch_size must be >= 1");
    }
    std::vector<std::size_t> order(shard.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(rng_seed);
    rng.shuffle(order);

    ModelVector current = model;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end =
            std::min(order.size(), start + static_cast<std::size_t>(batch_size));
        Dataset minibatch;
        minibatch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
            minibatch.push_back(shard[order[i]]);
        }
        const ModelVector g = gradient(task, current, minibatch);
        for (std::size_t i = 0; i < current.size(); ++i) {
            current[i] -= lr * g[i];
        }
    }
    check_finite(current, "local_sgd");
    return current;
}

ModelVector fedavg(const std::vector<ModelVector>& models,
                   const std::vector<double>& weights) {
    if (models.empty() || models.size() != weights.size()) {
        throw std::invalid_argument("fedavg: need equal non-zero model/weight counts");
    }
    const std::size_t dim = models[0].size();
    for (const auto& m : models) {
        if (m.size() != dim) {
            throw std::invalid_argument("fedavg: model dimension mismatch");
        }
    }
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-12) {
        throw std::invalid_argument("fedavg: weights must sum to 1");
    }
    ModelVector out(dim, 0.0);
    for (std::size_t u = 0; u < models.size(); ++u) {
        const double w = weights[u];
        for (std::size_t i = 0; i < dim; ++i) {
            out[i] += w * models[u][i];
        }
    }
    check_finite(out, "fedavg");
    return out;
}

std::vector<double> size_weights(const std::vector<std::size_t>& sizes) {
    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (total == 0) {
        throw std::invalid_argument("size_weights: total size is zero");
    }
    std::vector<double> w(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        w[i] = static_cast<double>(sizes[i]) / static_cast<double>(total);
    }
    return w;
}

std::vector<DatasetShard> partition_iid(const Dataset& dataset,
                                        const std::vector<UavId>& uav_ids,
                                        std::uint64_t rng_seed) {
    if (dataset.size() < uav_ids.size()) {
        throw std::invalid_argument("partition_iid: fewer samples than UAVs");
    }
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(rng_seed);
    rng.shuffle(order);

    const std::size_t k = uav_ids.size();
    const std::size_t base = dataset.size() / k;
    const std::size_t extra = dataset.size() % k;
    std::vector<DatasetShard> shards(k);
    std::size_t cursor = 0;
    for (std::size_t s = 0; s < k; ++s) {
        shards[s].owner = uav_ids[s];
        const std::size_t take = base + (s < extra ? 1 : 0);
        for (std::size_t i = 0; i < take; ++i) {
            shards[s].samples.push_back(dataset[order[cursor++]]);
        }
    }
    return shards;
}

std::vector<DatasetShard> partition_noniid(const Dataset& dataset,
                                           const std::vector<UavId>& uav_ids,
                                           int shards_per_uav,
                                           std::uint64_t rng_seed) {
    if (shards_per_uav < 1) {
        throw std::invalid_argument("partition_noniid: shards_per_uav must be >= 1");
    }
    const std::size_t num_shards = uav_ids.size() * static_cast<std::size_t>(shards_per_uav);
    if (dataset.size() < num_shards || num_shards == 0) {
        throw std::invalid_argument("partition_noniid: dataset too small for shard count");
    }
    // Stable label sort (ties keep original order) so the cut is deterministic.
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dataset[a].label < dataset[b].label;
    });

    std::vector<std::size_t> shard_ids(num_shards);
    std::iota(shard_ids.begin(), shard_ids.end(), std::size_t{0});
    Rng rng(rng_seed);
    rng.shuffle(shard_ids);

    const std::size_t base = dataset.size() / num_shards;
    const std::size_t extra = dataset.size() % num_shards;
    std::vector<std::size_t> shard_start(num_shards + 1, 0);
    for (std::size_t s = 0; s < num_shards; ++s) {
        shard_start[s + 1] = shard_start[s] + base + (s < extra ? 1 : 0);
    }

    std::vector<DatasetShard> shards(uav_ids.size());
    for (std::size_t u = 0; u < uav_ids.size(); ++u) {
        shards[u].owner = uav_ids[u];
        for (int j = 0; j < shards_per_uav; ++j) {
            const std::size_t sid = shard_ids[u * shards_per_uav + j];
            for (std::size_t i = shard_start[sid]; i < shard_start[sid + 1]; ++i) {
                shards[u].samples.push_back(dataset[order[i]]);
            }
        }
    }
    return shards;
}

EvalResult evaluate(const TaskSpec& task, const ModelVector& model,
                    const Dataset& eval_set) {
    if (eval_set.empty()) {
        throw std::invalid_argument("evaluate: empty eval set");
    }
    std::size_t correct = 0;
    double loss = 0.0;
    for (const Sample& s : eval_set) {
        check_sample(task, s);
        const std::vector<double> z = logits(task, model, s.features);
        loss += cross_entropy_from_logits(z, s.label);
        int argmax = 0;
        for (int k = 1; k < task.num_classes; ++k) {
            if (z[k] > z[argmax]) {
                argmax = k;  // strict >: ties resolve to the lowest index
            }
        }
        if (argmax == s.label) {
            ++correct;
        }
    }
    const double n = static_cast<double>(eval_set.size());
    return {static_cast<double>(correct) / n, loss / n};
}

}  // namespace bcsfl
