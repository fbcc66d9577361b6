#include "pls/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "pls/errors.hpp"
#include "pls/rng.hpp"

namespace pls {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// Reads a whole file; gzip streams are inflated, plain files pass through unchanged.
std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (f == nullptr) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes;
  std::vector<unsigned char> chunk(1 << 16);
  int n = 0;
  while ((n = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()))) > 0) {
    bytes.insert(bytes.end(), chunk.begin(), chunk.begin() + n);
  }
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw IoError("error reading " + path.string());
  return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) throw IoError("truncated IDX header in " + path.string());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

void Dataset::validate() const {
  if (labels.size() != inputs.rows()) {
    throw ConsistencyError("dataset '" + name + "': " + std::to_string(labels.size()) + " labels for " +
                           std::to_string(inputs.rows()) + " rows");
  }
  for (std::size_t label : labels) {
    if (label >= num_classes) {
      throw ConsistencyError("dataset '" + name + "': label " + std::to_string(label) +
                             " out of range for K=" + std::to_string(num_classes));
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices, std::string subset_name) const {
  Dataset out;
  out.inputs = gather_rows(inputs, indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  out.num_classes = num_classes;
  out.name = std::move(subset_name);
  return out;
}

Matrix one_hot(std::span<const std::size_t> labels, std::size_t num_classes) {
  Matrix out(labels.size(), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) throw ContractError("one_hot: label out of range");
    out(i, labels[i]) = 1.0;
  }
  return out;
}

Dataset gen_blobs(const BlobSpec& spec) {
  if (spec.num_classes < 2 || spec.per_class < 1 || spec.dim < 1) {
    throw ConfigError("gen_blobs: need num_classes >= 2, per_class >= 1, dim >= 1");
  }
  if (!(spec.center_spread >= 0.0) || !(spec.noise_sigma >= 0.0)) {
    throw ConfigError("gen_blobs: center_spread and noise_sigma must be non-negative");
  }
  Rng center_rng(spec.seed, "blob-centers");
  Matrix centers(spec.num_classes, spec.dim);
  for (double& c : centers.data()) c = center_rng.normal(0.0, spec.center_spread) + spec.center_shift;

  Rng sample_rng(spec.seed, "blob-samples");
  Dataset ds;
  ds.num_classes = spec.num_classes;
  ds.name = "blobs";
  ds.inputs = Matrix(spec.num_classes * spec.per_class, spec.dim);
  ds.labels.reserve(ds.inputs.rows());
  std::size_t row = 0;
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    for (std::size_t n = 0; n < spec.per_class; ++n, ++row) {
      for (std::size_t d = 0; d < spec.dim; ++d) {
        ds.inputs(row, d) = centers(k, d) + spec.noise_sigma * sample_rng.normal();
      }
      ds.labels.push_back(k);
    }
  }
  return ds;
}

Dataset gen_uniform_noise(std::uint64_t seed, std::size_t count, std::size_t dim, std::size_t num_classes) {
  if (count == 0 || dim == 0 || num_classes < 2) throw ConfigError("gen_uniform_noise: invalid sizes");
  Rng rng(seed, "uniform-noise");
  Dataset ds;
  ds.num_classes = num_classes;
  ds.name = "uniform-noise";
  ds.inputs = Matrix(count, dim);
  for (double& v : ds.inputs.data()) v = rng.uniform();
  ds.labels.assign(count, 0);
  return ds;
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::size_t num_classes) {
  const auto images = read_file_bytes(images_path);
  const auto labels = read_file_bytes(labels_path);

  if (read_be32(images, 0, images_path) != kIdxImageMagic) {
    throw FormatError("bad IDX image magic in " + images_path.string());
  }
  if (read_be32(labels, 0, labels_path) != kIdxLabelMagic) {
    throw FormatError("bad IDX label magic in " + labels_path.string());
  }
  const std::size_t n_images = read_be32(images, 4, images_path);
  const std::size_t rows = read_be32(images, 8, images_path);
  const std::size_t cols = read_be32(images, 12, images_path);
  const std::size_t n_labels = read_be32(labels, 4, labels_path);
  if (n_images != n_labels) {
    throw ConsistencyError("IDX count mismatch: " + std::to_string(n_images) + " images vs " +
                           std::to_string(n_labels) + " labels");
  }
  const std::size_t dim = rows * cols;
  if (images.size() < 16 + n_images * dim) throw IoError("truncated IDX image data in " + images_path.string());
  if (labels.size() < 8 + n_labels) throw IoError("truncated IDX label data in " + labels_path.string());

  Dataset ds;
  ds.num_classes = num_classes;
  ds.name = images_path.filename().string();
  ds.inputs = Matrix(n_images, dim);
  auto dst = ds.inputs.data();
  for (std::size_t i = 0; i < n_images * dim; ++i) dst[i] = static_cast<double>(images[16 + i]) / 255.0;
  ds.labels.reserve(n_labels);
  for (std::size_t i = 0; i < n_labels; ++i) ds.labels.push_back(labels[8 + i]);
  ds.validate();
  return ds;
}

void write_idx(const Dataset& dataset, std::size_t image_rows, std::size_t image_cols,
               const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  if (image_rows * image_cols != dataset.dim()) {
    throw DimensionError("write_idx: " + std::to_string(image_rows) + "x" + std::to_string(image_cols) +
                         " does not match dimension " + std::to_string(dataset.dim()));
  }
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw IoError("write_idx: cannot open output files");
  write_be32(img, kIdxImageMagic);
  write_be32(img, static_cast<std::uint32_t>(dataset.size()));
  write_be32(img, static_cast<std::uint32_t>(image_rows));
  write_be32(img, static_cast<std::uint32_t>(image_cols));
  for (double v : dataset.inputs.data()) {
    const auto px = static_cast<unsigned char>(std::clamp(std::lround(v * 255.0), 0L, 255L));
    img.put(static_cast<char>(px));
  }
  write_be32(lab, kIdxLabelMagic);
  write_be32(lab, static_cast<std::uint32_t>(dataset.size()));
  for (std::size_t label : dataset.labels) lab.put(static_cast<char>(label));
  if (!img || !lab) throw IoError("write_idx: write failed");
}

std::vector<Dataset> split(const Dataset& dataset, std::span<const double> fractions, std::uint64_t seed) {
  if (fractions.empty()) throw ConfigError("split: no fractions given");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ConfigError("split: fractions must be non-negative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split: fractions must sum to 1");

  Rng rng(seed, "split");
  const auto order = rng.permutation(dataset.size());
  std::vector<Dataset> parts;
  double cumulative = 0.0;
  std::size_t begin = 0;
  for (std::size_t p = 0; p < fractions.size(); ++p) {
    cumulative += fractions[p];
    const std::size_t end = p + 1 == fractions.size()
                                ? dataset.size()
                                : static_cast<std::size_t>(std::llround(cumulative * dataset.size()));
    std::span<const std::size_t> idx(order.data() + begin, std::max(end, begin) - begin);
    parts.push_back(dataset.subset(idx, dataset.name + "/part" + std::to_string(p)));
    begin = std::max(end, begin);
  }
  return parts;
}

Standardizer Standardizer::fit(const Matrix& inputs) {
  if (inputs.rows() == 0) throw ContractError("Standardizer::fit: empty input");
  Standardizer s;
  s.mean.assign(inputs.cols(), 0.0);
  s.stddev.assign(inputs.cols(), 0.0);
  const double n = static_cast<double>(inputs.rows());
  for (std::size_t i = 0; i < inputs.rows(); ++i)
    for (std::size_t d = 0; d < inputs.cols(); ++d) s.mean[d] += inputs(i, d);
  for (double& m : s.mean) m /= n;
  for (std::size_t i = 0; i < inputs.rows(); ++i)
    for (std::size_t d = 0; d < inputs.cols(); ++d) {
      const double c = inputs(i, d) - s.mean[d];
      s.stddev[d] += c * c;
    }
  for (double& sd : s.stddev) {
    sd = std::sqrt(sd / n);
    if (sd < 1e-12) sd = 1.0;  // constant column: center only
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& inputs) const {
  if (empty()) return inputs;
  if (inputs.cols() != mean.size()) {
    throw DimensionError("Standardizer: fitted on " + std::to_string(mean.size()) + " columns, got " +
                         inputs.shape_string());
  }
  Matrix out(inputs.rows(), inputs.cols());
  for (std::size_t i = 0; i < inputs.rows(); ++i)
    for (std::size_t d = 0; d < inputs.cols(); ++d) out(i, d) = (inputs(i, d) - mean[d]) / stddev[d];
  return out;
}

BatchIterator::BatchIterator(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed,
                             std::size_t epoch)
    : dataset_(&dataset), batch_size_(batch_size) {
  if (batch_size == 0) throw ConfigError("batches: batch_size must be positive");
  Rng rng(derive_seed(seed, "shuffle", epoch));
  order_ = rng.permutation(dataset.size());
}

std::size_t BatchIterator::batch_count() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

std::span<const std::size_t> BatchIterator::batch_indices(std::size_t index) const {
  const std::size_t begin = index * batch_size_;
  if (begin >= order_.size()) throw ContractError("batches: batch index out of range");
  const std::size_t end = std::min(order_.size(), begin + batch_size_);
  return {order_.data() + begin, end - begin};
}

Batch BatchIterator::batch(std::size_t index) const {
  const auto idx = batch_indices(index);
  Batch b;
  b.inputs = gather_rows(dataset_->inputs, idx);
  b.labels.reserve(idx.size());
  for (std::size_t i : idx) b.labels.push_back(dataset_->labels[i]);
  b.onehot = one_hot(b.labels, dataset_->num_classes);
  return b;
}

BatchIterator batches(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed, std::size_t epoch) {
  return BatchIterator(dataset, batch_size, seed, epoch);
}

Batch full_batch(const Dataset& dataset) {
  Batch b;
  b.inputs = dataset.inputs;
  b.labels = dataset.labels;
  b.onehot = one_hot(b.labels, dataset.num_classes);
  return b;
}

}  // namespace pls
