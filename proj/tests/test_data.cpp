#include <doctest.h>

#include <zlib.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "pls/data.hpp"
#include "pls/errors.hpp"

namespace fs = std::filesystem;
using pls::Matrix;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "plslab_test_data";
  fs::create_directories(dir);
  return dir / name;
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<unsigned char>((v >> s) & 0xff));
}

std::vector<unsigned char> idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                                      const std::vector<unsigned char>& pixels, std::uint32_t magic = 0x00000803) {
  std::vector<unsigned char> out;
  put_u32(out, magic);
  put_u32(out, count);
  put_u32(out, rows);
  put_u32(out, cols);
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

std::vector<unsigned char> idx_labels(const std::vector<unsigned char>& labels, std::uint32_t magic = 0x00000801) {
  std::vector<unsigned char> out;
  put_u32(out, magic);
  put_u32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_gz(const fs::path& p, const std::vector<unsigned char>& bytes) {
  gzFile f = gzopen(p.string().c_str(), "wb");
  REQUIRE(f != nullptr);
  gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
  gzclose(f);
}

}  // namespace

TEST_CASE("load_idx: hand-crafted 2-image 2x2 pair") {
  const std::vector<unsigned char> pixels = {0, 255, 51, 102, 255, 0, 0, 204};
  write_bytes(scratch("img"), idx_images(2, 2, 2, pixels));
  write_bytes(scratch("lbl"), idx_labels({3, 7}));
  const auto ds = pls::load_idx(scratch("img"), scratch("lbl"));
  REQUIRE(ds.inputs.rows() == 2);
  REQUIRE(ds.inputs.cols() == 4);
  for (std::size_t i = 0; i < pixels.size(); ++i) CHECK(ds.inputs.data()[i] == pixels[i] / 255.0);
  CHECK(ds.inputs(0, 1) == 1.0);
  CHECK(ds.labels == std::vector<std::size_t>{3, 7});
  CHECK(ds.num_classes == 10);

  write_gz(scratch("img.gz"), idx_images(2, 2, 2, pixels));
  write_gz(scratch("lbl.gz"), idx_labels({3, 7}));
  const auto gz = pls::load_idx(scratch("img.gz"), scratch("lbl.gz"));
  CHECK(gz.inputs == ds.inputs);
  CHECK(gz.labels == ds.labels);
}

TEST_CASE("load_idx: error paths") {
  const std::vector<unsigned char> pixels = {1, 2, 3, 4, 5, 6, 7, 8};
  write_bytes(scratch("ok_img"), idx_images(2, 2, 2, pixels));
  write_bytes(scratch("ok_lbl"), idx_labels({1, 2}));

  write_bytes(scratch("bad_magic"), idx_images(2, 2, 2, pixels, 0x00000804));
  CHECK_THROWS_AS(pls::load_idx(scratch("bad_magic"), scratch("ok_lbl")), pls::FormatError);
  write_bytes(scratch("bad_lbl_magic"), idx_labels({1, 2}, 0x00000803));
  CHECK_THROWS_AS(pls::load_idx(scratch("ok_img"), scratch("bad_lbl_magic")), pls::FormatError);

  write_bytes(scratch("three_lbl"), idx_labels({1, 2, 3}));
  CHECK_THROWS_AS(pls::load_idx(scratch("ok_img"), scratch("three_lbl")), pls::ConsistencyError);

  auto truncated = idx_images(2, 2, 2, pixels);
  truncated.resize(truncated.size() - 3);
  write_bytes(scratch("short_img"), truncated);
  CHECK_THROWS_AS(pls::load_idx(scratch("short_img"), scratch("ok_lbl")), pls::IoError);

  CHECK_THROWS_AS(pls::load_idx(scratch("does_not_exist"), scratch("ok_lbl")), pls::IoError);

  write_bytes(scratch("big_lbl"), idx_labels({1, 12}));
  CHECK_THROWS_AS(pls::load_idx(scratch("ok_img"), scratch("big_lbl")), pls::ConsistencyError);
}

TEST_CASE("write_idx round-trips through load_idx") {
  pls::Dataset ds{Matrix{{0.0, 1.0, 0.2, 0.4}, {1.0, 0.0, 0.6, 0.8}}, {4, 9}, 10, "rt"};
  pls::write_idx(ds, 2, 2, scratch("rt_img"), scratch("rt_lbl"));
  const auto back = pls::load_idx(scratch("rt_img"), scratch("rt_lbl"));
  CHECK(back.labels == ds.labels);
  for (std::size_t i = 0; i < ds.inputs.size(); ++i) {
    CHECK(std::abs(back.inputs.data()[i] - ds.inputs.data()[i]) <= 0.5 / 255.0);
  }
}

TEST_CASE("gen_blobs: determinism, noise-free centers, balance") {
  pls::BlobSpec spec;
  spec.seed = 42;
  const auto a = pls::gen_blobs(spec);
  const auto b = pls::gen_blobs(spec);
  CHECK(a.inputs == b.inputs);
  CHECK(a.labels == b.labels);
  CHECK(a.size() == 300);
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::count(a.labels.begin(), a.labels.end(), k) == 100);

  spec.noise_sigma = 0.0;
  const auto c = pls::gen_blobs(spec);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const std::size_t first = c.labels[i] * spec.per_class;
    for (std::size_t d = 0; d < c.dim(); ++d) CHECK(c.inputs(i, d) == c.inputs(first, d));
  }

  pls::BlobSpec shifted = spec;
  shifted.center_shift = 2.0;
  const auto s = pls::gen_blobs(shifted);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t d = 0; d < s.dim(); ++d) CHECK(s.inputs(i, d) == doctest::Approx(c.inputs(i, d) + 2.0));

  pls::BlobSpec bad;
  bad.num_classes = 0;
  CHECK_THROWS_AS(pls::gen_blobs(bad), pls::ConfigError);
  bad = {};
  bad.noise_sigma = -1.0;
  CHECK_THROWS_AS(pls::gen_blobs(bad), pls::ConfigError);
}

TEST_CASE("split: sizes, disjointness, determinism") {
  pls::BlobSpec spec;
  spec.per_class = 250;
  spec.num_classes = 4;
  const auto ds = pls::gen_blobs(spec);
  REQUIRE(ds.size() == 1000);
  const double fractions[] = {0.9, 0.1};
  const auto parts = pls::split(ds, fractions, 7);
  CHECK(parts[0].size() == 900);
  CHECK(parts[1].size() == 100);

  // Rows are unique in a noisy blob set, so the first coordinate identifies a sample.
  std::set<double> seen;
  for (const auto& p : parts)
    for (std::size_t i = 0; i < p.size(); ++i) seen.insert(p.inputs(i, 0));
  CHECK(seen.size() == 1000);

  const auto again = pls::split(ds, fractions, 7);
  CHECK(again[1].inputs == parts[1].inputs);
  const double bad[] = {0.5, 0.4};
  CHECK_THROWS_AS(pls::split(ds, bad, 7), pls::ConfigError);
}

TEST_CASE("batches: deterministic order and exact partition") {
  pls::BlobSpec spec;
  spec.per_class = 17;
  const auto ds = pls::gen_blobs(spec);
  const auto it = pls::batches(ds, 8, 3, 5);
  const auto again = pls::batches(ds, 8, 3, 5);
  CHECK(it.order() == again.order());
  CHECK(it.order() != pls::batches(ds, 8, 3, 6).order());
  CHECK(it.batch_count() == 7);

  std::vector<std::size_t> all;
  for (std::size_t b = 0; b < it.batch_count(); ++b) {
    const auto idx = it.batch_indices(b);
    all.insert(all.end(), idx.begin(), idx.end());
    const auto batch = it.batch(b);
    CHECK(batch.inputs.rows() == idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      CHECK(batch.labels[r] == ds.labels[idx[r]]);
      CHECK(batch.onehot(r, batch.labels[r]) == 1.0);
      for (std::size_t d = 0; d < ds.dim(); ++d) CHECK(batch.inputs(r, d) == ds.inputs(idx[r], d));
    }
  }
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
  CHECK(all.size() == ds.size());
}

TEST_CASE("standardizer: fit gives zero mean and unit variance on the fitted split") {
  pls::BlobSpec spec;
  spec.center_spread = 4.0;
  const auto ds = pls::gen_blobs(spec);
  const auto st = pls::Standardizer::fit(ds.inputs);
  const Matrix z = st.apply(ds.inputs);
  for (std::size_t d = 0; d < z.cols(); ++d) {
    double mean = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) mean += z(i, d);
    mean /= static_cast<double>(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) sq += (z(i, d) - mean) * (z(i, d) - mean);
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(sq / static_cast<double>(z.rows()) - 1.0) < 1e-9);
  }
  CHECK_THROWS_AS(st.apply(Matrix(2, 3)), pls::DimensionError);
}

TEST_CASE("uniform noise and one_hot") {
  const auto noise = pls::gen_uniform_noise(1, 50, 7, 4);
  CHECK(noise.size() == 50);
  CHECK(noise.dim() == 7);
  for (double v : noise.inputs.data()) {
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
  const std::size_t labels[] = {2, 0};
  CHECK(pls::one_hot(labels, 3) == Matrix{{0, 0, 1}, {1, 0, 0}});
  const std::size_t bad[] = {3};
  CHECK_THROWS(pls::one_hot(bad, 3));
}

#ifdef PLSLAB_DATA_DIR
TEST_CASE("bundled MNIST subset loads") {
  const fs::path dir = PLSLAB_DATA_DIR;
  const auto test = pls::load_idx(dir / "t10k-images-idx3-ubyte.gz", dir / "t10k-labels-idx1-ubyte.gz");
  CHECK(test.size() == 2000);
  CHECK(test.dim() == 784);
  std::set<std::size_t> classes(test.labels.begin(), test.labels.end());
  CHECK(classes.size() == 10);
}
#endif
