#pragma once

#include <cstdint>
#include <string>

#include "bcsfl/flcore.hpp"

namespace bcsfl {

// Isotropic Gaussian blobs, one per class. Class means are auto-placed at
// (separation * sigma / sqrt(2)) along distinct coordinate axes, which puts
// every pair of means exactly separation * sigma apart (requires
// num_classes <= dim). Labels are balanced and interleaved.
struct BlobSpec {
    int num_classes = 3;
    int dim = 20;
    int samples_per_class = 500;
    double sigma = 1.0;
    double separation = 3.0;
};

Dataset make_blobs(const BlobSpec& spec, std::uint64_t seed);

// Split into (train, eval) with a seed-deterministic shuffle; eval_fraction
// of the samples go to the eval set (at least one sample in each part).
struct TrainEvalSplit {
    Dataset train;
    Dataset eval;
};
TrainEvalSplit split_train_eval(const Dataset& dataset, double eval_fraction,
                                std::uint64_t seed);

// IDX readers (big-endian dims, magic 0x00000803 for images and 0x00000801
// for labels). Files may be raw or gzip-compressed; both are read
// transparently. Pixels are scaled from uint8 to [0, 1]. limit > 0 stops
// after that many samples.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       std::size_t limit = 0);

// Locate a file under data_dir accepting either "<stem>" or "<stem>.gz".
// Returns the empty string when neither exists.
std::string find_idx_file(const std::string& data_dir, const std::string& stem);

struct MnistDataset {
    Dataset train;
    Dataset test;
};

// Load train-images/train-labels and t10k-images/t10k-labels from data_dir.
// train_limit > 0 truncates the training set (desk-scale runs).
MnistDataset load_mnist(const std::string& data_dir, std::size_t train_limit = 0);

}  // namespace bcsfl
