#include <doctest.h>

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "bcsfl/dataset.hpp"
#include "bcsfl/flcore.hpp"
#include "bcsfl/rng.hpp"

using namespace bcsfl;

namespace {

TaskSpec logistic_task(int dim = 4, int classes = 3) {
    return TaskSpec{ModelKind::kLogistic, dim, 0, classes};
}

TaskSpec mlp_task(int dim = 4, int hidden = 5, int classes = 3) {
    return TaskSpec{ModelKind::kMlp, dim, hidden, classes};
}

Dataset random_batch(const TaskSpec& task, std::size_t n, Rng& rng) {
    Dataset batch(n);
    for (Sample& s : batch) {
        s.features.resize(task.input_dim);
        for (double& f : s.features) {
            f = rng.next_normal();
        }
        s.label = static_cast<int>(rng.below(task.num_classes));
    }
    return batch;
}

ModelVector random_model(const TaskSpec& task, Rng& rng, double scale = 0.5) {
    ModelVector m(task.model_dim());
    for (double& w : m) {
        w = scale * rng.next_normal();
    }
    return m;
}

// Central finite differences of the mean batch loss.
ModelVector fd_gradient(const TaskSpec& task, const ModelVector& model,
                        const Dataset& batch, double h = 1e-5) {
    ModelVector g(model.size());
    ModelVector probe = model;
    for (std::size_t i = 0; i < model.size(); ++i) {
        probe[i] = model[i] + h;
        const double up = local_objective(task, probe, batch);
        probe[i] = model[i] - h;
        const double down = local_objective(task, probe, batch);
        probe[i] = model[i];
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

double max_rel_err(const ModelVector& a, const ModelVector& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

}  // namespace

TEST_CASE("local_objective: zero weights give ln C exactly") {
    const TaskSpec task = logistic_task(4, 3);
    const ModelVector zero(task.model_dim(), 0.0);
    Rng rng(1);
    const Dataset shard = random_batch(task, 7, rng);
    CHECK(local_objective(task, zero, shard) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK_THROWS_AS(local_objective(task, zero, {}), std::invalid_argument);
}

TEST_CASE("local_objective: saturated correct prediction has ~zero loss") {
    const TaskSpec task = logistic_task(2, 2);
    // Big weights towards class 0 for feature pattern (1, 0).
    ModelVector m(task.model_dim(), 0.0);
    m[0] = 50.0;   // W[0][0]
    m[2] = -50.0;  // W[1][0]
    const Dataset shard{{{1.0, 0.0}, 0}};
    CHECK(local_objective(task, m, shard) < 1e-12);
}

TEST_CASE("local_objective: matches independent scalar recomputation") {
    const TaskSpec task = logistic_task(2, 3);
    // Hand-set weights, W row-major per class then biases.
    const ModelVector m{0.5, -0.2, 0.1, 0.4, -0.3, 0.2, 0.05, -0.05, 0.0};
    const Dataset shard{{{1.0, 2.0}, 0}, {{-1.0, 0.5}, 2}, {{0.0, -1.0}, 1}};

    double expected = 0.0;
    for (const Sample& s : shard) {
        long double z[3];
        for (int k = 0; k < 3; ++k) {
            z[k] = m[2 * k] * s.features[0] + m[2 * k + 1] * s.features[1] + m[6 + k];
        }
        long double denom = 0.0L;
        for (int k = 0; k < 3; ++k) {
            denom += std::exp(z[k]);
        }
        expected += static_cast<double>(std::log(denom) - z[s.label]);
    }
    expected /= 3.0;
    CHECK(local_objective(task, m, shard) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("global_objective: degenerate and weighted cases") {
    const TaskSpec task = logistic_task(3, 3);
    Rng rng(2);
    const ModelVector m = random_model(task, rng);
    const Dataset shard = random_batch(task, 5, rng);

    CHECK(global_objective(task, m, {shard}, {1.0}) ==
          doctest::Approx(local_objective(task, m, shard)));
    CHECK(global_objective(task, m, {shard, shard}, {0.5, 0.5}) ==
          doctest::Approx(local_objective(task, m, shard)));
    CHECK_THROWS_AS(global_objective(task, m, {shard}, {0.9}), std::invalid_argument);
}

TEST_CASE("global_objective: size weights equal the pooled mean loss") {
    const TaskSpec task = logistic_task(3, 3);
    Rng rng(3);
    const ModelVector m = random_model(task, rng);
    const std::vector<Dataset> shards{random_batch(task, 4, rng),
                                      random_batch(task, 9, rng),
                                      random_batch(task, 2, rng)};
    Dataset pooled;
    std::vector<std::size_t> sizes;
    for (const Dataset& s : shards) {
        pooled.insert(pooled.end(), s.begin(), s.end());
        sizes.push_back(s.size());
    }
    const double expected = local_objective(task, m, pooled);
    CHECK(std::abs(global_objective(task, m, shards, size_weights(sizes)) - expected) <
          1e-10);
}

TEST_CASE("gradient: perfectly separated saturated batch has tiny gradient") {
    const TaskSpec task = logistic_task(2, 2);
    ModelVector m(task.model_dim(), 0.0);
    m[0] = 60.0;
    m[3] = 60.0;  // W[1][1]
    const Dataset batch{{{1.0, 0.0}, 0}, {{0.0, 1.0}, 1}};
    const ModelVector g = gradient(task, m, batch);
    double norm = 0.0;
    for (double v : g) {
        norm += v * v;
    }
    CHECK(std::sqrt(norm) < 1e-6);
}

TEST_CASE("gradient: zero-weight logistic matches the closed form") {
    // With zero weights every class has probability 1/C, so the residual is
    // (1/C - one_hot) and the W-row gradient is residual * x.
    const TaskSpec task = logistic_task(3, 4);
    const ModelVector zero(task.model_dim(), 0.0);
    const Dataset batch{{{2.0, -1.0, 0.5}, 1}};
    const ModelVector g = gradient(task, zero, batch);
    for (int k = 0; k < 4; ++k) {
        const double residual = 0.25 - (k == 1 ? 1.0 : 0.0);
        for (int j = 0; j < 3; ++j) {
            CHECK(g[3 * k + j] ==
                  doctest::Approx(residual * batch[0].features[j]).epsilon(1e-12));
        }
        CHECK(g[12 + k] == doctest::Approx(residual).epsilon(1e-12));
    }
}

TEST_CASE("gradient: matches central finite differences (both kinds)") {
    for (const TaskSpec& task : {logistic_task(4, 3), mlp_task(4, 5, 3)}) {
        Rng rng(7);
        for (int trial = 0; trial < 50; ++trial) {
            const ModelVector m = random_model(task, rng);
            const Dataset batch = random_batch(task, 6, rng);
            const ModelVector analytic = gradient(task, m, batch);
            const ModelVector numeric = fd_gradient(task, m, batch);
            CHECK(max_rel_err(analytic, numeric) < 1e-5);
        }
    }
}

TEST_CASE("local_sgd: lr=0 leaves the model unchanged") {
    const TaskSpec task = logistic_task();
    Rng rng(9);
    const ModelVector m = random_model(task, rng);
    const Dataset shard = random_batch(task, 12, rng);
    CHECK(local_sgd(task, m, shard, 0.0, 4, 5) == m);
}

TEST_CASE("local_sgd: one covering batch is a single gradient step") {
    const TaskSpec task = logistic_task();
    Rng rng(10);
    const ModelVector m = random_model(task, rng);
    const Dataset shard = random_batch(task, 8, rng);
    const ModelVector stepped = local_sgd(task, m, shard, 0.1, 8, 5);
    const ModelVector g = gradient(task, m, shard);
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(stepped[i] == doctest::Approx(m[i] - 0.1 * g[i]).epsilon(1e-12));
    }
}

TEST_CASE("local_sgd: two batches replay manually, short tail included") {
    const TaskSpec task = logistic_task(3, 3);
    Rng rng(11);
    const ModelVector m0 = random_model(task, rng);
    const Dataset shard = random_batch(task, 5, rng);  // batches of 3 and 2
    const std::uint64_t seed = 1234;
    const ModelVector got = local_sgd(task, m0, shard, 0.05, 3, seed);

    // Replay: reproduce the shuffle with the same Rng, then two manual steps.
    std::vector<std::size_t> order(shard.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng replay_rng(seed);
    replay_rng.shuffle(order);
    Dataset b1, b2;
    for (std::size_t i = 0; i < 3; ++i) b1.push_back(shard[order[i]]);
    for (std::size_t i = 3; i < 5; ++i) b2.push_back(shard[order[i]]);

    ModelVector expected = m0;
    for (const Dataset* b : {&b1, &b2}) {
        const ModelVector g = gradient(task, expected, *b);
        for (std::size_t i = 0; i < expected.size(); ++i) {
            expected[i] -= 0.05 * g[i];
        }
    }
    CHECK(got == expected);

    // Determinism across calls.
    CHECK(local_sgd(task, m0, shard, 0.05, 3, seed) == got);
}

TEST_CASE("fedavg: basic combinations and error paths") {
    const ModelVector a(6, 0.0);
    const ModelVector b(6, 1.0);
    CHECK(fedavg({b, b, b}, {0.2, 0.5, 0.3}) == b);

    const ModelVector quarter = fedavg({a, b}, {0.75, 0.25});
    CHECK(std::all_of(quarter.begin(), quarter.end(),
                      [](double v) { return v == doctest::Approx(0.25); }));

    CHECK_THROWS_AS(fedavg({a, ModelVector(5, 0.0)}, {0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(fedavg({a, b}, {0.6, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(fedavg({}, {}), std::invalid_argument);
}

TEST_CASE("fedavg: matches per-coordinate scalar oracle") {
    Rng rng(13);
    std::vector<ModelVector> models;
    for (int i = 0; i < 3; ++i) {
        ModelVector m(10);
        for (double& v : m) {
            v = rng.next_normal();
        }
        models.push_back(std::move(m));
    }
    const std::vector<double> w = size_weights({10, 20, 30});
    CHECK(w[0] == doctest::Approx(1.0 / 6));
    CHECK(w[1] == doctest::Approx(1.0 / 3));
    CHECK(w[2] == doctest::Approx(1.0 / 2));
    const ModelVector avg = fedavg(models, w);
    for (std::size_t i = 0; i < 10; ++i) {
        const double expected =
            w[0] * models[0][i] + w[1] * models[1][i] + w[2] * models[2][i];
        CHECK(avg[i] == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("fedavg properties: convexity and joint permutation invariance") {
    Rng rng(14);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng.below(4);
        std::vector<ModelVector> models(n, ModelVector(8));
        std::vector<double> raw(n);
        for (auto& m : models) {
            for (double& v : m) {
                v = rng.next_normal();
            }
        }
        double sum = 0.0;
        for (double& r : raw) {
            r = 0.05 + rng.next_double();
            sum += r;
        }
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = raw[i] / sum;
        }
        // Exact unit sum for the check below.
        w[n - 1] = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);

        const ModelVector avg = fedavg(models, w);
        for (std::size_t i = 0; i < 8; ++i) {
            double lo = models[0][i], hi = models[0][i];
            for (const auto& m : models) {
                lo = std::min(lo, m[i]);
                hi = std::max(hi, m[i]);
            }
            CHECK(avg[i] >= lo - 1e-12);
            CHECK(avg[i] <= hi + 1e-12);
        }

        // Permuting (model, weight) pairs together preserves the result.
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(perm);
        std::vector<ModelVector> pm(n);
        std::vector<double> pw(n);
        for (std::size_t i = 0; i < n; ++i) {
            pm[i] = models[perm[i]];
            pw[i] = w[perm[i]];
        }
        const ModelVector avg2 = fedavg(pm, pw);
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(avg2[i] == doctest::Approx(avg[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("partition_iid: shard sizes and the partition property") {
    Dataset data(101);
    for (int i = 0; i < 101; ++i) {
        data[i].features = {static_cast<double>(i)};  // unique tag
        data[i].label = 0;
    }
    std::vector<UavId> ids(10);
    std::iota(ids.begin(), ids.end(), 0);

    const auto shards = partition_iid(Dataset(data.begin(), data.begin() + 100), ids, 5);
    for (const auto& s : shards) {
        CHECK(s.samples.size() == 10);
    }

    const auto uneven = partition_iid(data, ids, 5);
    std::multiset<double> seen;
    int elevens = 0;
    for (const auto& s : uneven) {
        CHECK((s.samples.size() == 10 || s.samples.size() == 11));
        elevens += s.samples.size() == 11;
        for (const Sample& x : s.samples) {
            seen.insert(x.features[0]);
        }
    }
    CHECK(elevens == 1);
    // Union equals the dataset with no duplicates.
    REQUIRE(seen.size() == data.size());
    int i = 0;
    for (double v : seen) {
        CHECK(v == doctest::Approx(static_cast<double>(i++)));
    }

    // Determinism.
    const auto again = partition_iid(data, ids, 5);
    for (std::size_t s = 0; s < uneven.size(); ++s) {
        CHECK(again[s].samples.size() == uneven[s].samples.size());
        for (std::size_t j = 0; j < uneven[s].samples.size(); ++j) {
            CHECK(again[s].samples[j].features[0] == uneven[s].samples[j].features[0]);
        }
    }
    CHECK_THROWS_AS(partition_iid(Dataset(4), std::vector<UavId>(9, 0), 1),
                    std::invalid_argument);
}

TEST_CASE("partition_noniid: label skew, the deal replay, and the partition") {
    // Balanced 10-class set sized so every label-shard is single-label.
    Dataset data;
    for (int label = 0; label < 10; ++label) {
        for (int i = 0; i < 100; ++i) {
            Sample s;
            s.label = label;
            s.features = {static_cast<double>(label * 100 + i)};
            data.push_back(std::move(s));
        }
    }
    std::vector<UavId> ids(10);
    std::iota(ids.begin(), ids.end(), 0);

    const auto shards = partition_noniid(data, ids, 2, 77);
    std::multiset<double> seen;
    for (const auto& s : shards) {
        std::set<int> labels;
        for (const Sample& x : s.samples) {
            labels.insert(x.label);
            seen.insert(x.features[0]);
        }
        CHECK(labels.size() <= 2);
        CHECK(s.samples.size() == 100);  // two 50-sample label-shards
    }
    CHECK(seen.size() == data.size());

    // Replay the deal: the same permutation of shard ids must reproduce the
    // per-UAV label multiset.
    std::vector<std::size_t> shard_ids(20);
    std::iota(shard_ids.begin(), shard_ids.end(), std::size_t{0});
    Rng rng(77);
    rng.shuffle(shard_ids);
    for (std::size_t u = 0; u < 10; ++u) {
        std::multiset<int> expected_labels;
        for (int j = 0; j < 2; ++j) {
            const std::size_t sid = shard_ids[u * 2 + j];
            for (int i = 0; i < 50; ++i) {
                expected_labels.insert(static_cast<int>(sid / 2));  // 2 shards per label
            }
        }
        std::multiset<int> got;
        for (const Sample& x : shards[u].samples) {
            got.insert(x.label);
        }
        CHECK(got == expected_labels);
    }

    CHECK_THROWS_AS(partition_noniid(Dataset(5), ids, 2, 1), std::invalid_argument);
}

TEST_CASE("evaluate: tie rule, perfect separation, and a hand-scored batch") {
    const TaskSpec task = logistic_task(2, 4);
    const ModelVector zero(task.model_dim(), 0.0);
    Dataset balanced;
    for (int label = 0; label < 4; ++label) {
        for (int i = 0; i < 5; ++i) {
            balanced.push_back({{0.5, -0.5}, label});
        }
    }
    // All logits zero: argmax tie resolves to class 0, so accuracy = 1/C.
    const EvalResult uniform = evaluate(task, zero, balanced);
    CHECK(uniform.accuracy == doctest::Approx(0.25));
    CHECK(uniform.loss == doctest::Approx(std::log(4.0)));

    const TaskSpec sep = logistic_task(2, 2);
    ModelVector m(sep.model_dim(), 0.0);
    m[0] = 10.0;
    m[3] = 10.0;
    const Dataset train{{{1.0, 0.0}, 0}, {{0.0, 1.0}, 1}, {{0.9, 0.1}, 0}};
    CHECK(evaluate(sep, m, train).accuracy == doctest::Approx(1.0));

    // Hand-scored: class = sign of feature sum via fixed weights.
    ModelVector scorer(sep.model_dim(), 0.0);
    scorer[0] = 1.0;
    scorer[1] = 1.0;  // class 0 logit = x0 + x1, class 1 logit = 0
    Dataset ten;
    int expect_correct = 0;
    Rng rng(21);
    for (int i = 0; i < 10; ++i) {
        Sample s;
        s.features = {rng.next_normal(), rng.next_normal()};
        s.label = static_cast<int>(rng.below(2));
        const double z0 = s.features[0] + s.features[1];
        const int pred = z0 > 0.0 ? 0 : (z0 == 0.0 ? 0 : 1);
        expect_correct += pred == s.label;
        ten.push_back(std::move(s));
    }
    CHECK(evaluate(sep, scorer, ten).accuracy ==
          doctest::Approx(expect_correct / 10.0));
}

TEST_CASE("init_model: logistic zeros, MLP seeded and deterministic") {
    const ModelVector lm = init_model(logistic_task(), 4);
    CHECK(std::all_of(lm.begin(), lm.end(), [](double v) { return v == 0.0; }));
    const ModelVector a = init_model(mlp_task(), 4);
    const ModelVector b = init_model(mlp_task(), 4);
    const ModelVector c = init_model(mlp_task(), 5);
    CHECK(a == b);
    CHECK(a != c);
    CHECK(std::any_of(a.begin(), a.end(), [](double v) { return v != 0.0; }));
}

TEST_CASE("make_blobs: balanced labels, exact mean separation, determinism") {
    BlobSpec spec;
    spec.num_classes = 3;
    spec.dim = 20;
    spec.samples_per_class = 40;
    spec.separation = 3.0;
    const Dataset data = make_blobs(spec, 99);
    REQUIRE(data.size() == 120);
    std::map<int, int> counts;
    for (const Sample& s : data) {
        counts[s.label] += 1;
        REQUIRE(s.features.size() == 20);
    }
    for (const auto& [label, n] : counts) {
        CHECK(n == 40);
    }
    // Pairwise mean distance is separation * sigma by construction.
    const double coord = 3.0 / std::sqrt(2.0);
    const double pairwise = std::sqrt(2.0 * coord * coord);
    CHECK(pairwise == doctest::Approx(3.0));

    const Dataset again = make_blobs(spec, 99);
    CHECK(again[7].features == data[7].features);
}

TEST_CASE("split_train_eval: sizes, disjointness, determinism") {
    Dataset data(50);
    for (int i = 0; i < 50; ++i) {
        data[i].features = {static_cast<double>(i)};
    }
    const TrainEvalSplit split = split_train_eval(data, 0.2, 3);
    CHECK(split.eval.size() == 10);
    CHECK(split.train.size() == 40);
    std::multiset<double> all;
    for (const Sample& s : split.train) {
        all.insert(s.features[0]);
    }
    for (const Sample& s : split.eval) {
        all.insert(s.features[0]);
    }
    CHECK(all.size() == 50);
    CHECK(*all.begin() == 0.0);
    CHECK(*all.rbegin() == 49.0);
}

TEST_CASE("IDX loader: raw and gzip fixtures, magic validation") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "bcsfl_idx_test";
    fs::create_directories(dir);

    // 3 images of 2x2 pixels with labels 2, 0, 1.
    const std::vector<std::uint8_t> images{
        0x00, 0x00, 0x08, 0x03, 0x00, 0x00, 0x00, 0x03,
        0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02,
        0,   255, 128, 64,
        1,   2,   3,   4,
        255, 255, 0,   0};
    const std::vector<std::uint8_t> labels{
        0x00, 0x00, 0x08, 0x01, 0x00, 0x00, 0x00, 0x03, 2, 0, 1};

    const fs::path img_raw = dir / "imgs";
    const fs::path lbl_raw = dir / "lbls";
    std::ofstream(img_raw, std::ios::binary)
        .write(reinterpret_cast<const char*>(images.data()), images.size());
    std::ofstream(lbl_raw, std::ios::binary)
        .write(reinterpret_cast<const char*>(labels.data()), labels.size());

    const Dataset loaded = load_mnist_idx(img_raw.string(), lbl_raw.string());
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[0].label == 2);
    CHECK(loaded[1].label == 0);
    CHECK(loaded[2].label == 1);
    CHECK(loaded[0].features == std::vector<double>{0.0, 1.0, 128.0 / 255, 64.0 / 255});

    // Same bytes gzip-compressed load identically.
    const fs::path img_gz = dir / "imgs2.gz";
    const fs::path lbl_gz = dir / "lbls2.gz";
    gzFile gz = gzopen(img_gz.string().c_str(), "wb");
    gzwrite(gz, images.data(), static_cast<unsigned>(images.size()));
    gzclose(gz);
    gz = gzopen(lbl_gz.string().c_str(), "wb");
    gzwrite(gz, labels.data(), static_cast<unsigned>(labels.size()));
    gzclose(gz);
    const Dataset gz_loaded = load_mnist_idx(img_gz.string(), lbl_gz.string());
    REQUIRE(gz_loaded.size() == 3);
    CHECK(gz_loaded[1].features == loaded[1].features);

    // Limit cuts the stream early.
    CHECK(load_mnist_idx(img_raw.string(), lbl_raw.string(), 2).size() == 2);

    // Swapped files fail the magic check.
    CHECK_THROWS_AS(load_mnist_idx(lbl_raw.string(), img_raw.string()),
                    std::runtime_error);

    fs::remove_all(dir);
}
