#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pls/tensor.hpp"

namespace pls {

struct Dataset {
  Matrix inputs;                    // N x D
  std::vector<std::size_t> labels;  // N entries in [0, K)
  std::size_t num_classes = 0;
  std::string name;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return inputs.cols(); }
  // Throws ConsistencyError unless labels.size() == inputs.rows() and every label < K.
  void validate() const;

  Dataset subset(std::span<const std::size_t> indices, std::string subset_name) const;
};

// One training or evaluation step's worth of samples.
struct Batch {
  Matrix inputs;  // B x D
  Matrix onehot;  // B x K
  std::vector<std::size_t> labels;
};

Matrix one_hot(std::span<const std::size_t> labels, std::size_t num_classes);

struct BlobSpec {
  std::uint64_t seed = 0;
  std::size_t num_classes = 3;
  std::size_t per_class = 100;
  std::size_t dim = 20;
  double center_spread = 1.0;  // centers ~ N(0, center_spread^2) per coordinate
  double noise_sigma = 1.0;    // isotropic sample noise around each center
  double center_shift = 0.0;   // added to every center coordinate (out-of-distribution variants)
};

// K Gaussian clusters; rows ordered class by class. Centers depend only on
// (seed, K, dim, center_spread) so shifted variants share the same geometry.
Dataset gen_blobs(const BlobSpec& spec);

// Uniform [0,1) noise with placeholder labels 0; used as a confidence-only OOD input.
Dataset gen_uniform_noise(std::uint64_t seed, std::size_t count, std::size_t dim, std::size_t num_classes);

// IDX image/label pair (optionally gzip-compressed, detected from content). Pixels scaled to [0,1].
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::size_t num_classes = 10);

// Writes an uncompressed IDX pair; pixels are round(255 * value) clamped to [0,255].
void write_idx(const Dataset& dataset, std::size_t image_rows, std::size_t image_cols,
               const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

// Seeded shuffle then contiguous slices; fractions must sum to 1. Slice sizes are
// round(cumulative fraction * N) differences, so they always add up to N.
std::vector<Dataset> split(const Dataset& dataset, std::span<const double> fractions, std::uint64_t seed);

// Per-dimension mean and standard deviation, estimated on one split and applied to others.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Standardizer fit(const Matrix& inputs);
  Matrix apply(const Matrix& inputs) const;
  bool empty() const { return mean.empty(); }
};

// Shuffled mini-batches for one epoch. Order is a function of (seed, epoch) only;
// the final short batch is kept.
class BatchIterator {
 public:
  BatchIterator(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed, std::size_t epoch);

  std::size_t batch_count() const;
  Batch batch(std::size_t index) const;
  std::span<const std::size_t> batch_indices(std::size_t index) const;
  const std::vector<std::size_t>& order() const { return order_; }

 private:
  const Dataset* dataset_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
};

BatchIterator batches(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed, std::size_t epoch);

// The whole dataset as one batch, in row order.
Batch full_batch(const Dataset& dataset);

}  // namespace pls
