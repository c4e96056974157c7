#include "bcsfl/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "bcsfl/aggregation.hpp"
#include "bcsfl/clustering.hpp"
#include "bcsfl/dataset.hpp"
#include "bcsfl/flcore.hpp"
#include "bcsfl/ledger.hpp"
#include "bcsfl/rng.hpp"

namespace bcsfl {

void ExperimentConfig::validate() const {
    if (uavs < 2) {
        throw ConfigError("config: uavs must be >= 2");
    }
    if (area_width <= 0.0 || area_height <= 0.0) {
        throw ConfigError("config: area dimensions must be positive");
    }
    if (comm_range <= 2.0 * max_drift || max_drift < 0.0) {
        throw ConfigError("config: need comm_range > 2*max_drift and max_drift >= 0");
    }
    if (scheme == Scheme::kKha) {
        if (!k.has_value()) {
            throw ConfigError("config: scheme=kha requires the field 'k'");
        }
        if (*k < 1) {
            throw ConfigError("config: k must be >= 1");
        }
    } else if (k.has_value()) {
        throw ConfigError("config: field 'k' is only valid with scheme=kha");
    }
    if (lr <= 0.0) {
        throw ConfigError("config: lr must be > 0");
    }
    if (batch_size < 1) {
        throw ConfigError("config: batch_size must be >= 1");
    }
    if (rounds < 1) {
        throw ConfigError("config: rounds must be >= 1");
    }
    if (layouts < 1) {
        throw ConfigError("config: layouts must be >= 1");
    }
    if (shards_per_uav < 1) {
        throw ConfigError("config: shards_per_uav must be >= 1");
    }
    if (eval_fraction <= 0.0 || eval_fraction >= 1.0) {
        throw ConfigError("config: eval_fraction must be in (0, 1)");
    }
    if (model != "auto" && model != "logistic" && model != "mlp") {
        throw ConfigError("config: model must be auto|logistic|mlp");
    }
    if (synthetic_classes < 2 || synthetic_dim < synthetic_classes ||
        synthetic_samples_per_class < 1) {
        throw ConfigError("config: synthetic task needs classes >= 2, dim >= classes");
    }
    if (hidden_dim < 1) {
        throw ConfigError("config: hidden_dim must be >= 1");
    }
}

namespace {

std::string trim(const std::string& s) {
    const std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

long parse_int(const std::string& value, const std::string& what) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: invalid integer for " + what + ": '" + value + "'");
    }
}

double parse_double(const std::string& value, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: invalid number for " + what + ": '" + value + "'");
    }
}

}  // namespace

void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value) {
    if (key == "uavs") config.uavs = static_cast<int>(parse_int(value, key));
    else if (key == "area_width") config.area_width = parse_double(value, key);
    else if (key == "area_height") config.area_height = parse_double(value, key);
    else if (key == "comm_range") config.comm_range = parse_double(value, key);
    else if (key == "max_drift") config.max_drift = parse_double(value, key);
    else if (key == "scheme") {
        try {
            config.scheme = scheme_from_string(value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    } else if (key == "k") config.k = static_cast<int>(parse_int(value, key));
    else if (key == "dataset") {
        if (value == "synthetic") config.dataset = DatasetKind::kSynthetic;
        else if (value == "mnist") config.dataset = DatasetKind::kMnist;
        else throw ConfigError("config: dataset must be synthetic|mnist");
    } else if (key == "partition") {
        if (value == "iid") config.partition = PartitionKind::kIid;
        else if (value == "noniid") config.partition = PartitionKind::kNonIid;
        else throw ConfigError("config: partition must be iid|noniid");
    } else if (key == "shards_per_uav") config.shards_per_uav = static_cast<int>(parse_int(value, key));
    else if (key == "data_dir") config.data_dir = value;
    else if (key == "mnist_train_limit") config.mnist_train_limit = static_cast<int>(parse_int(value, key));
    else if (key == "synthetic_classes") config.synthetic_classes = static_cast<int>(parse_int(value, key));
    else if (key == "synthetic_dim") config.synthetic_dim = static_cast<int>(parse_int(value, key));
    else if (key == "synthetic_samples_per_class") config.synthetic_samples_per_class = static_cast<int>(parse_int(value, key));
    else if (key == "synthetic_sigma") config.synthetic_sigma = parse_double(value, key);
    else if (key == "synthetic_separation") config.synthetic_separation = parse_double(value, key);
    else if (key == "eval_fraction") config.eval_fraction = parse_double(value, key);
    else if (key == "model") config.model = value;
    else if (key == "hidden_dim") config.hidden_dim = static_cast<int>(parse_int(value, key));
    else if (key == "lr") config.lr = parse_double(value, key);
    else if (key == "batch_size") config.batch_size = static_cast<int>(parse_int(value, key));
    else if (key == "rounds") config.rounds = static_cast<int>(parse_int(value, key));
    else if (key == "layouts") config.layouts = static_cast<int>(parse_int(value, key));
    else if (key == "seed") config.master_seed = static_cast<std::uint64_t>(parse_int(value, key));
    else if (key == "out") config.out = value;
    else throw ConfigError("config: unknown key '" + key + "'");
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open '" + path + "'");
    }
    ExperimentConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        const std::string stripped = trim(line);
        if (stripped.empty()) {
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected 'key = value'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": empty key or value");
        }
        try {
            apply_override(config, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return config;
}

namespace {

TaskSpec task_for(const ExperimentConfig& config, int input_dim, int num_classes) {
    TaskSpec task;
    const bool mlp = config.model == "mlp" ||
                     (config.model == "auto" && config.dataset == DatasetKind::kMnist);
    task.kind = mlp ? ModelKind::kMlp : ModelKind::kLogistic;
    task.input_dim = input_dim;
    task.hidden_dim = mlp ? config.hidden_dim : 0;
    task.num_classes = num_classes;
    task.validate();
    return task;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9f", v);
    return buf;
}

std::string csv_row(int layout, const RoundMetrics& m) {
    std::ostringstream row;
    row << layout << ',' << m.round << ',' << to_string(m.scheme) << ',' << m.k << ','
        << m.num_clusters << ',' << format_double(m.acc_mean) << ','
        << format_double(m.loss_mean) << ',' << format_double(m.acc_min) << ','
        << format_double(m.acc_max) << ',' << m.messages.intra_cluster << ','
        << m.messages.inter_cluster << ',' << m.messages.total();
    return row.str();
}

}  // namespace

int run_experiment(const ExperimentConfig& config, std::ostream& csv_out,
                   std::ostream& log) {
    config.validate();

    // Resolve the dataset once; layouts reuse it.
    Dataset train;
    Dataset eval_set;
    if (config.dataset == DatasetKind::kSynthetic) {
        BlobSpec blobs;
        blobs.num_classes = config.synthetic_classes;
        blobs.dim = config.synthetic_dim;
        blobs.samples_per_class = config.synthetic_samples_per_class;
        blobs.sigma = config.synthetic_sigma;
        blobs.separation = config.synthetic_separation;
        const Dataset all = make_blobs(blobs, derive_seed(config.master_seed, "blobs"));
        TrainEvalSplit split = split_train_eval(all, config.eval_fraction,
                                                derive_seed(config.master_seed, "split"));
        train = std::move(split.train);
        eval_set = std::move(split.eval);
    } else {
        std::string dir = config.data_dir;
        if (dir.empty()) {
            const char* env = std::getenv("BCSFL_DATA_DIR");
            dir = env == nullptr ? "" : env;
        }
        if (dir.empty()) {
            throw ConfigError(
                "config: dataset=mnist needs data_dir or $BCSFL_DATA_DIR");
        }
        MnistDataset mnist =
            load_mnist(dir, static_cast<std::size_t>(std::max(0, config.mnist_train_limit)));
        train = std::move(mnist.train);
        eval_set = std::move(mnist.test);
    }
    int num_classes = 0;
    for (const Sample& s : train) {
        num_classes = std::max(num_classes, s.label + 1);
    }
    const TaskSpec task =
        task_for(config, static_cast<int>(train[0].features.size()), num_classes);

    csv_out << kCsvHeader << '\n';

    RoundOptions options;
    options.scheme = config.scheme;
    options.k = config.k.value_or(0);
    options.lr = config.lr;
    options.batch_size = config.batch_size;

    int layouts_run = 0;
    for (int layout_id = 0; layout_id < config.layouts; ++layout_id) {
        SwarmConfig swarm;
        swarm.num_uavs = config.uavs;
        swarm.area_width = config.area_width;
        swarm.area_height = config.area_height;
        swarm.comm_range = config.comm_range;
        swarm.max_drift = config.max_drift;
        swarm.rng_seed = derive_seed(config.master_seed, "swarm",
                                     static_cast<std::uint64_t>(layout_id));

        Topology topology;
        try {
            topology = deploy_swarm(swarm);
        } catch (const std::runtime_error& e) {
            log << "layout " << layout_id << ": skipped (" << e.what() << ")\n";
            continue;
        }

        // Register the whole swarm before training starts.
        LedgerState ledger;
        for (int u = 0; u < config.uavs; ++u) {
            join_bcsfl(ledger, "operator-0", "uav-" + std::to_string(u));
        }
        if (ledger.total_nodes() != static_cast<std::uint64_t>(config.uavs) ||
            !verify_chain(ledger)) {
            throw std::logic_error("runner: ledger registration failed");
        }

        const ClusterLayout layout = cluster_swarm(topology, swarm);

        // Conventional FL trains on every UAV; the clustered schemes train
        // on non-CH members only.
        std::vector<UavId> training_ids;
        for (UavId u = 0; u < config.uavs; ++u) {
            if (options.scheme == Scheme::kConventional || !layout.is_head(u)) {
                training_ids.push_back(u);
            }
        }
        const std::uint64_t partition_seed =
            derive_seed(config.master_seed, "partition", static_cast<std::uint64_t>(layout_id));
        const std::vector<DatasetShard> shards =
            config.partition == PartitionKind::kIid
                ? partition_iid(train, training_ids, partition_seed)
                : partition_noniid(train, training_ids, config.shards_per_uav,
                                   partition_seed);

        const ModelVector init = init_model(
            task, derive_seed(config.master_seed, "init", static_cast<std::uint64_t>(layout_id)));
        RoundState state = RoundState::initial(
            init, options.scheme == Scheme::kConventional ? 1 : layout.num_clusters);

        std::vector<std::string> rows;
        rows.reserve(config.rounds);
        for (int round = 1; round <= config.rounds; ++round) {
            const Topology drifted = apply_drift(topology, round, swarm.rng_seed);
            RoundResult result =
                run_round(task, layout, drifted, shards, state, options, eval_set,
                          derive_seed(config.master_seed, "round",
                                      static_cast<std::uint64_t>(layout_id),
                                      static_cast<std::uint64_t>(round)));
            state = std::move(result.state);
            if (result.metrics.carried_clusters > 0) {
                log << "layout " << layout_id << " round " << round << ": "
                    << result.metrics.carried_clusters
                    << " cluster(s) carried forward (no training data)\n";
            }
            rows.push_back(csv_row(layout_id, result.metrics));
        }
        for (const std::string& r : rows) {
            csv_out << r << '\n';
        }
        ++layouts_run;
    }
    csv_out.flush();
    return layouts_run;
}

int run_experiment_to_path(const ExperimentConfig& config, std::ostream& log) {
    if (config.out == "-") {
        return run_experiment(config, std::cout, log);
    }
    std::ofstream out(config.out, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open output file '" + config.out + "'");
    }
    return run_experiment(config, out, log);
}

namespace {

struct CsvRow {
    std::string scheme;
    int k = 0;
    int round = 0;
    double acc_mean = 0.0;
    long long msg_total = 0;
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.push_back("");
    }
    return fields;
}

[[noreturn]] void csv_error(const std::string& path, int line_no, const std::string& msg) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + msg);
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<std::string>& csv_paths,
                                  double accuracy_threshold) {
    if (csv_paths.empty()) {
        throw std::runtime_error("summarize: need at least one CSV file");
    }
    std::vector<CsvRow> rows;
    for (const std::string& path : csv_paths) {
        std::ifstream in(path);
        if (!in) {
            throw std::runtime_error("summarize: cannot open '" + path + "'");
        }
        std::string line;
        int line_no = 0;
        if (!std::getline(in, line)) {
            csv_error(path, 1, "empty file");
        }
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line != kCsvHeader) {
            csv_error(path, 1, "unexpected header");
        }
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (line.empty()) {
                continue;
            }
            const std::vector<std::string> f = split_csv_line(line);
            if (f.size() != 12) {
                csv_error(path, line_no, "expected 12 fields, got " +
                                             std::to_string(f.size()));
            }
            CsvRow row;
            try {
                row.scheme = f[2];
                row.k = std::stoi(f[3]);
                row.round = std::stoi(f[1]);
                row.acc_mean = std::stod(f[5]);
                row.msg_total = std::stoll(f[11]);
            } catch (const std::exception&) {
                csv_error(path, line_no, "unparsable numeric field");
            }
            if (row.acc_mean < 0.0 || row.acc_mean > 1.0) {
                csv_error(path, line_no, "accuracy out of [0,1]");
            }
            rows.push_back(std::move(row));
        }
    }

    // Group by (scheme, k); threshold is evaluated on the across-layout mean
    // accuracy per round.
    std::map<std::pair<std::string, int>, std::vector<CsvRow>> groups;
    for (const CsvRow& r : rows) {
        groups[{r.scheme, r.k}].push_back(r);
    }
    std::vector<SummaryRow> out;
    for (const auto& [key, group] : groups) {
        SummaryRow s;
        s.scheme = key.first;
        s.k = key.second;
        s.data_rows = group.size();
        double msg_sum = 0.0;
        std::map<int, std::pair<double, int>> by_round;  // round -> (acc sum, n)
        for (const CsvRow& r : group) {
            msg_sum += static_cast<double>(r.msg_total);
            auto& acc = by_round[r.round];
            acc.first += r.acc_mean;
            acc.second += 1;
        }
        s.mean_total_messages = msg_sum / static_cast<double>(group.size());
        for (const auto& [round, acc] : by_round) {
            if (acc.first / acc.second >= accuracy_threshold) {
                s.rounds_to_threshold = round;
                break;
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

void print_summary(const std::vector<SummaryRow>& rows, bool tsv, std::ostream& out) {
    if (tsv) {
        out << "scheme\tk\trounds_to_threshold\tmean_total_messages\trows\n";
        for (const SummaryRow& r : rows) {
            out << r.scheme << '\t' << r.k << '\t';
            if (r.rounds_to_threshold >= 0) {
                out << r.rounds_to_threshold;
            }
            out << '\t' << format_double(r.mean_total_messages) << '\t' << r.data_rows
                << '\n';
        }
        return;
    }
    out << std::left << std::setw(14) << "scheme" << std::right << std::setw(4) << "k"
        << std::setw(22) << "rounds_to_threshold" << std::setw(22)
        << "mean_total_messages" << std::setw(8) << "rows" << '\n';
    for (const SummaryRow& r : rows) {
        out << std::left << std::setw(14) << r.scheme << std::right << std::setw(4)
            << r.k << std::setw(22);
        if (r.rounds_to_threshold >= 0) {
            out << r.rounds_to_threshold;
        } else {
            out << "-";
        }
        out << std::setw(22) << std::fixed << std::setprecision(1)
            << r.mean_total_messages << std::setw(8) << r.data_rows << '\n';
    }
    out.unsetf(std::ios::fixed);
}

}  // namespace bcsfl
