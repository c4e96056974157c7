#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcsfl/overhead.hpp"

namespace bcsfl {

// Raised for invalid configuration (bad file syntax, unknown keys, violated
// invariants); the CLI maps it to exit code 2. Messages carry
// "<file>:<line>: ..." when the problem is tied to a config file line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DatasetKind { kSynthetic, kMnist };
enum class PartitionKind { kIid, kNonIid };

struct ExperimentConfig {
    // Swarm
    int uavs = 20;
    double area_width = 1000.0;
    double area_height = 1000.0;
    double comm_range = 150.0;
    double max_drift = 5.0;

    // Protocol
    Scheme scheme = Scheme::kFca;
    std::optional<int> k;  // required iff scheme == kha

    // Data
    DatasetKind dataset = DatasetKind::kSynthetic;
    PartitionKind partition = PartitionKind::kIid;
    int shards_per_uav = 2;  // non-IID deal
    std::string data_dir;    // MNIST; falls back to $BCSFL_DATA_DIR
    int mnist_train_limit = 0;

    // Synthetic blobs
    int synthetic_classes = 3;
    int synthetic_dim = 20;
    int synthetic_samples_per_class = 500;
    double synthetic_sigma = 1.0;
    double synthetic_separation = 3.0;
    double eval_fraction = 0.2;

    // Task
    std::string model = "auto";  // auto | logistic | mlp
    int hidden_dim = 64;
    double lr = 0.05;
    int batch_size = 10;

    // Experiment loop
    int rounds = 100;
    int layouts = 1;
    std::uint64_t master_seed = 1;
    std::string out = "-";  // "-" = stdout

    void validate() const;  // throws ConfigError
};

// Parse a flat "key = value" file ('#' starts a comment). Unknown keys and
// malformed lines raise ConfigError with the offending line number.
ExperimentConfig parse_config_file(const std::string& path);

// Apply one "key=value" override (CLI flags); throws ConfigError.
void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value);

inline constexpr const char* kCsvHeader =
    "layout,round,scheme,k,Q,acc_mean,loss_mean,acc_min,acc_max,"
    "msg_intra,msg_inter,msg_total";

// Run the configured experiment, streaming CSV rows (header first) to
// csv_out and human-readable progress notes to log. Returns the number of
// layouts that ran (infeasible deployments are skipped with a log line).
int run_experiment(const ExperimentConfig& config, std::ostream& csv_out,
                   std::ostream& log);

// Convenience wrapper honoring config.out ("-" = stdout).
int run_experiment_to_path(const ExperimentConfig& config, std::ostream& log);

struct SummaryRow {
    std::string scheme;
    int k = 0;
    // First round whose across-layout mean accuracy reaches the threshold;
    // -1 when never reached.
    int rounds_to_threshold = -1;
    double mean_total_messages = 0.0;
    std::size_t data_rows = 0;
};

// Aggregate one or more metrics CSVs per (scheme, k), ordered by scheme
// name then k. Malformed input raises std::runtime_error with file:line.
std::vector<SummaryRow> summarize(const std::vector<std::string>& csv_paths,
                                  double accuracy_threshold);

// Aligned text table, or TSV when tsv is set (sentinel "-" column blank).
void print_summary(const std::vector<SummaryRow>& rows, bool tsv, std::ostream& out);

}  // namespace bcsfl
