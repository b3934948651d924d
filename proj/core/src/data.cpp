#include "dfc/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "dfc/errors.hpp"

namespace dfc {

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.kind = kind;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()), targets.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= size()) throw ShapeError("Dataset::subset: row index out of range");
    out.inputs.row(static_cast<Eigen::Index>(k)) = inputs.row(static_cast<Eigen::Index>(rows[k]));
    out.targets.row(static_cast<Eigen::Index>(k)) = targets.row(static_cast<Eigen::Index>(rows[k]));
  }
  return out;
}

void Dataset::validate() const {
  if (inputs.rows() != targets.rows()) throw ShapeError("dataset: input and target counts differ");
  if (kind != TaskKind::classification) return;
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    int ones = 0;
    for (Eigen::Index c = 0; c < targets.cols(); ++c) {
      const double t = targets(i, c);
      if (t == 1.0) ++ones;
      else if (t != 0.0) throw ShapeError("dataset: classification target is not one-hot");
    }
    if (ones != 1) throw ShapeError("dataset: classification target is not one-hot");
  }
}

void check_teacher_larger(const TeacherSpec& teacher, const std::vector<std::size_t>& student_sizes) {
  const auto& t = teacher.sizes;
  const auto& s = student_sizes;
  if (t.size() < 2 || s.size() < 2) throw ConfigError("teacher and student need at least one layer");
  if (t.front() != s.front() || t.back() != s.back()) {
    throw ConfigError("teacher and student must share input and output widths");
  }
  if (t.size() > s.size()) return;
  if (t.size() == s.size()) {
    bool wider = false;
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
      if (t[i] < s[i]) throw ConfigError("teacher layer narrower than student");
      wider = wider || t[i] > s[i];
    }
    if (wider) return;
  }
  throw ConfigError("teacher must have more hidden layers or neurons than the student");
}

std::pair<Dataset, Dataset> generate_student_teacher(const TeacherSpec& spec, std::size_t n_train, std::size_t n_test) {
  NetworkParams teacher = NetworkParams::zeros(spec.sizes, spec.activations);
  std::mt19937_64 rng(spec.seed);
  glorot_normal_init(teacher, rng);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  const auto n_in = static_cast<Eigen::Index>(spec.sizes.front());
  const auto n_out = static_cast<Eigen::Index>(spec.sizes.back());
  auto make = [&](std::size_t n) {
    Dataset ds;
    ds.kind = TaskKind::regression;
    ds.inputs.resize(static_cast<Eigen::Index>(n), n_in);
    ds.targets.resize(static_cast<Eigen::Index>(n), n_out);
    for (Eigen::Index i = 0; i < ds.inputs.rows(); ++i) {
      Vector x(n_in);
      for (Eigen::Index c = 0; c < n_in; ++c) x(c) = uniform(rng);
      ds.inputs.row(i) = x.transpose();
      ds.targets.row(i) = forward_pass(teacher, x).output().transpose();
    }
    return ds;
  };
  Dataset train = make(n_train);
  Dataset test = make(n_test);
  return {std::move(train), std::move(test)};
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::string& file) {
  if (offset + 4 > bytes.size()) {
    throw ParseError(file + ": truncated header at offset " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::ofstream& out, std::uint32_t x) {
  const std::array<char, 4> b{static_cast<char>(x >> 24), static_cast<char>(x >> 16), static_cast<char>(x >> 8),
                              static_cast<char>(x)};
  out.write(b.data(), 4);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t limit) {
  const std::string img_name = images.filename().string();
  const std::string lbl_name = labels.filename().string();
  const auto img = read_file(images);
  const auto lbl = read_file(labels);

  const std::uint32_t img_magic = read_be32(img, 0, img_name);
  if (img_magic != 0x00000803) throw ParseError(img_name + ": bad magic number at offset 0");
  const std::uint32_t lbl_magic = read_be32(lbl, 0, lbl_name);
  if (lbl_magic != 0x00000801) throw ParseError(lbl_name + ": bad magic number at offset 0");

  const std::size_t n_img = read_be32(img, 4, img_name);
  const std::size_t rows = read_be32(img, 8, img_name);
  const std::size_t cols = read_be32(img, 12, img_name);
  const std::size_t n_lbl = read_be32(lbl, 4, lbl_name);
  if (n_img != n_lbl) {
    throw ParseError(lbl_name + ": sample count at offset 4 (" + std::to_string(n_lbl) +
                     ") does not match image count (" + std::to_string(n_img) + ")");
  }
  const std::size_t pixels = rows * cols;
  const std::size_t n = std::min(n_img, limit);
  const std::size_t img_needed = 16 + n * pixels;
  if (img.size() < img_needed) {
    throw ParseError(img_name + ": truncated pixel data at offset " + std::to_string(img.size()));
  }
  if (lbl.size() < 8 + n) throw ParseError(lbl_name + ": truncated label data at offset " + std::to_string(lbl.size()));

  Dataset ds;
  ds.kind = TaskKind::classification;
  ds.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pixels));
  ds.targets = Matrix::Zero(static_cast<Eigen::Index>(n), 10);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t base = 16 + i * pixels;
    for (std::size_t p = 0; p < pixels; ++p) {
      ds.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = img[base + p] / 255.0;
    }
    const unsigned label = lbl[8 + i];
    if (label > 9) throw ParseError(lbl_name + ": label out of range at offset " + std::to_string(8 + i));
    ds.targets(static_cast<Eigen::Index>(i), label) = 1.0;
  }
  return ds;
}

void write_idx(const Dataset& ds, const std::filesystem::path& images, const std::filesystem::path& labels) {
  ds.validate();
  if (ds.kind != TaskKind::classification) throw ShapeError("write_idx: classification dataset required");
  const auto side = static_cast<std::uint32_t>(std::lround(std::sqrt(static_cast<double>(ds.inputs.cols()))));
  if (static_cast<Eigen::Index>(side) * side != ds.inputs.cols()) throw ShapeError("write_idx: images must be square");

  std::ofstream img(images, std::ios::binary);
  std::ofstream lbl(labels, std::ios::binary);
  if (!img || !lbl) throw ParseError("write_idx: cannot open output files");
  write_be32(img, 0x00000803);
  write_be32(img, static_cast<std::uint32_t>(ds.size()));
  write_be32(img, side);
  write_be32(img, side);
  write_be32(lbl, 0x00000801);
  write_be32(lbl, static_cast<std::uint32_t>(ds.size()));
  for (Eigen::Index i = 0; i < ds.inputs.rows(); ++i) {
    for (Eigen::Index p = 0; p < ds.inputs.cols(); ++p) {
      const double x = std::clamp(ds.inputs(i, p), 0.0, 1.0);
      img.put(static_cast<char>(std::lround(x * 255.0)));
    }
    Eigen::Index label = 0;
    ds.targets.row(i).maxCoeff(&label);
    lbl.put(static_cast<char>(label));
  }
}

BatchPlan::BatchPlan(Dataset train, Dataset validation, std::size_t batch_size, std::uint64_t seed)
    : train_(std::move(train)), val_(std::move(validation)), batch_size_(batch_size), seed_(seed) {
  if (batch_size_ == 0) throw ConfigError("batch_size must be positive");
}

std::vector<std::vector<std::size_t>> BatchPlan::epoch_batches(std::uint64_t epoch) const {
  std::vector<std::size_t> order(train_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size_) {
    const std::size_t end = std::min(order.size(), start + batch_size_);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

BatchPlan split_and_batch(const Dataset& ds, std::size_t val_count, std::size_t batch_size, std::uint64_t seed) {
  if (val_count > ds.size()) throw ConfigError("val_count exceeds dataset size");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(val_count));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(val_count), order.end());
  // Keep the original sample order inside each split.
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return BatchPlan(ds.subset(train), ds.subset(val), batch_size, seed);
}

}  // namespace dfc
