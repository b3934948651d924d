#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dfc/network.hpp"

namespace dfc {

enum class TaskKind { regression, classification };

/// Row i of inputs/targets is sample i.
struct Dataset {
  Matrix inputs;
  Matrix targets;
  TaskKind kind = TaskKind::regression;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
  Vector input(std::size_t i) const { return inputs.row(static_cast<Eigen::Index>(i)).transpose(); }
  Vector target(std::size_t i) const { return targets.row(static_cast<Eigen::Index>(i)).transpose(); }
  Dataset subset(const std::vector<std::size_t>& rows) const;
  void validate() const;
};

struct TeacherSpec {
  std::vector<std::size_t> sizes{15, 20, 15, 15, 5};
  std::vector<Activation> activations{Activation::tanh, Activation::tanh, Activation::tanh, Activation::linear};
  std::uint64_t seed = 0;
};

/// Throws ConfigError unless the teacher is deeper or wider than the student
/// and both share input and output widths.
void check_teacher_larger(const TeacherSpec& teacher, const std::vector<std::size_t>& student_sizes);

/// Random Glorot-initialized teacher; inputs uniform on [-1, 1].
std::pair<Dataset, Dataset> generate_student_teacher(const TeacherSpec& spec, std::size_t n_train, std::size_t n_test);

/// Reads an IDX image/label pair. Pixels are scaled to [0, 1], labels are
/// one-hot over 10 classes. limit caps the number of samples read.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t limit);

/// Writes a classification dataset with pixel values in [0, 1] back to IDX.
/// Images are square; values are rounded to the nearest byte.
void write_idx(const Dataset& ds, const std::filesystem::path& images, const std::filesystem::path& labels);

/// Train/validation split plus per-epoch shuffled minibatches.
class BatchPlan {
 public:
  BatchPlan(Dataset train, Dataset validation, std::size_t batch_size, std::uint64_t seed);

  const Dataset& train() const { return train_; }
  const Dataset& validation() const { return val_; }
  std::size_t batch_size() const { return batch_size_; }

  /// Row indices of the training set, shuffled for this epoch and cut into
  /// batches. The last batch may be smaller.
  std::vector<std::vector<std::size_t>> epoch_batches(std::uint64_t epoch) const;

 private:
  Dataset train_;
  Dataset val_;
  std::size_t batch_size_;
  std::uint64_t seed_;
};

/// Holds out val_count samples (chosen by a seeded shuffle) for validation.
BatchPlan split_and_batch(const Dataset& ds, std::size_t val_count, std::size_t batch_size, std::uint64_t seed);

}  // namespace dfc
