#include "bcsfl/dataset.hpp"

#include <zlib.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <stdexcept>

#include "bcsfl/rng.hpp"

namespace bcsfl {

Dataset make_blobs(const BlobSpec& spec, std::uint64_t seed) {
    if (spec.num_classes < 2 || spec.dim < spec.num_classes || spec.samples_per_class < 1) {
        throw std::invalid_argument("make_blobs: need num_classes >= 2, dim >= num_classes");
    }
    if (spec.sigma <= 0.0) {
        throw std::invalid_argument("make_blobs: sigma must be positive");
    }
    // Means at a/sqrt(2) along orthogonal axes are pairwise exactly a apart.
    const double mean_coord = spec.separation * spec.sigma / std::sqrt(2.0);
    Rng rng(seed);
    Dataset out;
    out.reserve(static_cast<std::size_t>(spec.num_classes) * spec.samples_per_class);
    for (int i = 0; i < spec.samples_per_class; ++i) {
        for (int c = 0; c < spec.num_classes; ++c) {
            Sample s;
            s.label = c;
            s.features.resize(spec.dim);
            for (int j = 0; j < spec.dim; ++j) {
                s.features[j] = spec.sigma * rng.next_normal() + (j == c ? mean_coord : 0.0);
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

TrainEvalSplit split_train_eval(const Dataset& dataset, double eval_fraction,
                                std::uint64_t seed) {
    if (dataset.size() < 2) {
        throw std::invalid_argument("split_train_eval: need at least 2 samples");
    }
    if (eval_fraction <= 0.0 || eval_fraction >= 1.0) {
        throw std::invalid_argument("split_train_eval: eval_fraction must be in (0, 1)");
    }
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);

    std::size_t eval_count = static_cast<std::size_t>(
        std::floor(eval_fraction * static_cast<double>(dataset.size())));
    eval_count = std::max<std::size_t>(1, std::min(eval_count, dataset.size() - 1));

    TrainEvalSplit split;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        (i < eval_count ? split.eval : split.train).push_back(dataset[order[i]]);
    }
    return split;
}

namespace {

// gzread handles both raw and gzip files, which is exactly the accepted
// input set for IDX ingestion.
class GzReader {
public:
    explicit GzReader(const std::string& path) : file_(gzopen(path.c_str(), "rb")) {
        if (file_ == nullptr) {
            throw std::runtime_error("cannot open " + path);
        }
    }
    ~GzReader() {
        if (file_ != nullptr) {
            gzclose(file_);
        }
    }
    GzReader(const GzReader&) = delete;
    GzReader& operator=(const GzReader&) = delete;

    void read_exact(void* dst, std::size_t len, const std::string& path) {
        const int got = gzread(file_, dst, static_cast<unsigned>(len));
        if (got < 0 || static_cast<std::size_t>(got) != len) {
            throw std::runtime_error("truncated IDX file: " + path);
        }
    }

    std::uint32_t read_be32(const std::string& path) {
        std::uint8_t buf[4];
        read_exact(buf, 4, path);
        return (std::uint32_t{buf[0]} << 24) | (std::uint32_t{buf[1]} << 16) |
               (std::uint32_t{buf[2]} << 8) | std::uint32_t{buf[3]};
    }

private:
    gzFile file_;
};

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

}  // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       std::size_t limit) {
    GzReader images(images_path);
    if (images.read_be32(images_path) != kImagesMagic) {
        throw std::runtime_error("bad magic in images file: " + images_path);
    }
    std::uint32_t count = images.read_be32(images_path);
    const std::uint32_t rows = images.read_be32(images_path);
    const std::uint32_t cols = images.read_be32(images_path);
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;

    GzReader labels(labels_path);
    if (labels.read_be32(labels_path) != kLabelsMagic) {
        throw std::runtime_error("bad magic in labels file: " + labels_path);
    }
    if (labels.read_be32(labels_path) != count) {
        throw std::runtime_error("image/label count mismatch: " + labels_path);
    }
    if (limit > 0 && limit < count) {
        count = static_cast<std::uint32_t>(limit);
    }

    Dataset out;
    out.reserve(count);
    std::vector<std::uint8_t> pixel_buf(pixels);
    for (std::uint32_t i = 0; i < count; ++i) {
        images.read_exact(pixel_buf.data(), pixels, images_path);
        std::uint8_t label = 0;
        labels.read_exact(&label, 1, labels_path);
        Sample s;
        s.label = label;
        s.features.resize(pixels);
        for (std::size_t j = 0; j < pixels; ++j) {
            s.features[j] = static_cast<double>(pixel_buf[j]) / 255.0;
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string find_idx_file(const std::string& data_dir, const std::string& stem) {
    namespace fs = std::filesystem;
    const fs::path plain = fs::path(data_dir) / stem;
    if (fs::exists(plain)) {
        return plain.string();
    }
    const fs::path gz = fs::path(data_dir) / (stem + ".gz");
    if (fs::exists(gz)) {
        return gz.string();
    }
    return {};
}

MnistDataset load_mnist(const std::string& data_dir, std::size_t train_limit) {
    const std::string train_images = find_idx_file(data_dir, "train-images-idx3-ubyte");
    const std::string train_labels = find_idx_file(data_dir, "train-labels-idx1-ubyte");
    const std::string test_images = find_idx_file(data_dir, "t10k-images-idx3-ubyte");
    const std::string test_labels = find_idx_file(data_dir, "t10k-labels-idx1-ubyte");
    if (train_images.empty() || train_labels.empty() || test_images.empty() ||
        test_labels.empty()) {
        throw std::runtime_error(
            "MNIST IDX files not found under '" + data_dir +
            "' (expected train-images-idx3-ubyte[.gz], train-labels-idx1-ubyte[.gz], "
            "t10k-images-idx3-ubyte[.gz], t10k-labels-idx1-ubyte[.gz]; "
            "see tools/fetch_mnist.py)");
    }
    MnistDataset data;
    data.train = load_mnist_idx(train_images, train_labels, train_limit);
    data.test = load_mnist_idx(test_images, test_labels);
    return data;
}

}  // namespace bcsfl
