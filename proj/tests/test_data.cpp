#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "dfc/data.hpp"
#include "dfc/errors.hpp"

using namespace dfc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dfc_test_data";
  fs::create_directories(dir);
  return dir / name;
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Two 2x2 images, labels 3 and 7.
std::vector<unsigned char> tiny_images() {
  return {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 255, 255, 0, 255, 0, 0, 255};
}
std::vector<unsigned char> tiny_labels() { return {0, 0, 8, 1, 0, 0, 0, 2, 3, 7}; }

}  // namespace

TEST_CASE("load_idx on a handcrafted file") {
  const auto img = scratch("tiny-images"), lbl = scratch("tiny-labels");
  write_bytes(img, tiny_images());
  write_bytes(lbl, tiny_labels());
  const Dataset ds = load_idx(img, lbl, 100);
  REQUIRE(ds.size() == 2);
  CHECK(ds.inputs.cols() == 4);
  CHECK(ds.inputs(0, 0) == 0.0);
  CHECK(ds.inputs(0, 1) == 1.0);
  CHECK(ds.inputs(1, 3) == 1.0);
  CHECK(ds.targets(0, 3) == 1.0);
  CHECK(ds.targets(1, 7) == 1.0);
  CHECK(ds.targets.sum() == 2.0);
  CHECK(ds.kind == TaskKind::classification);
  CHECK_NOTHROW(ds.validate());

  CHECK(load_idx(img, lbl, 0).size() == 0);
  CHECK(load_idx(img, lbl, 1).size() == 1);
}

TEST_CASE("load_idx errors name the offset") {
  const auto img = scratch("bad-images"), lbl = scratch("bad-labels");
  write_bytes(lbl, tiny_labels());

  auto bytes = tiny_images();
  bytes[3] = 0x01;
  write_bytes(img, bytes);
  try {
    load_idx(img, lbl, 10);
    FAIL("bad magic accepted");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("offset 0") != std::string::npos);
  }

  bytes = tiny_images();
  bytes.resize(bytes.size() - 2);
  write_bytes(img, bytes);
  CHECK_THROWS_AS(load_idx(img, lbl, 10), ParseError);

  write_bytes(img, tiny_images());
  auto labels = tiny_labels();
  labels[7] = 3;
  write_bytes(lbl, labels);
  try {
    load_idx(img, lbl, 10);
    FAIL("count mismatch accepted");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("offset 4") != std::string::npos);
  }

  labels = tiny_labels();
  labels[9] = 12;
  write_bytes(lbl, labels);
  CHECK_THROWS_AS(load_idx(img, lbl, 10), ParseError);

  CHECK_THROWS_AS(load_idx(scratch("missing"), lbl, 10), ParseError);
}

TEST_CASE("IDX round trip") {
  Dataset ds;
  ds.kind = TaskKind::classification;
  ds.inputs = Matrix::Zero(3, 9);
  ds.targets = Matrix::Zero(3, 10);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index p = 0; p < 9; ++p) ds.inputs(i, p) = static_cast<double>((i * 9 + p) * 7 % 256) / 255.0;
    ds.targets(i, (i * 4) % 10) = 1.0;
  }
  const auto img = scratch("rt-images"), lbl = scratch("rt-labels");
  write_idx(ds, img, lbl);
  const Dataset back = load_idx(img, lbl, 100);
  CHECK(back.inputs == ds.inputs);
  CHECK(back.targets == ds.targets);
}

TEST_CASE("student-teacher generation") {
  TeacherSpec spec;
  spec.seed = 4;
  const auto [a_train, a_test] = generate_student_teacher(spec, 50, 20);
  const auto [b_train, b_test] = generate_student_teacher(spec, 50, 20);
  CHECK(a_train.inputs == b_train.inputs);
  CHECK(a_test.targets == b_test.targets);
  CHECK(a_train.targets.cols() == 5);
  CHECK(a_train.inputs.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(a_train.size() == 50);
  CHECK(a_test.size() == 20);

  spec.seed = 5;
  CHECK(generate_student_teacher(spec, 50, 20).first.targets != a_train.targets);
}

TEST_CASE("teacher must be larger than the student") {
  TeacherSpec spec;
  CHECK_NOTHROW(check_teacher_larger(spec, {15, 10, 10, 5}));
  CHECK_THROWS_AS(check_teacher_larger(spec, {15, 20, 15, 15, 5}), ConfigError);
  CHECK_THROWS_AS(check_teacher_larger(spec, {16, 10, 10, 5}), ConfigError);
  spec.sizes = {15, 10, 10, 5};
  CHECK_THROWS_AS(check_teacher_larger(spec, {15, 10, 10, 5}), ConfigError);
  spec.sizes = {15, 12, 10, 5};
  CHECK_NOTHROW(check_teacher_larger(spec, {15, 10, 10, 5}));
}

TEST_CASE("split and batching") {
  Dataset ds;
  ds.inputs = Matrix(103, 2);
  ds.targets = Matrix(103, 1);
  for (Eigen::Index i = 0; i < 103; ++i) {
    ds.inputs.row(i).setConstant(static_cast<double>(i));
    ds.targets(i, 0) = static_cast<double>(i);
  }
  const BatchPlan plan = split_and_batch(ds, 13, 10, 7);
  CHECK(plan.train().size() == 90);
  CHECK(plan.validation().size() == 13);

  std::set<double> seen;
  for (Eigen::Index i = 0; i < 90; ++i) seen.insert(plan.train().targets(i, 0));
  for (Eigen::Index i = 0; i < 13; ++i) CHECK(seen.count(plan.validation().targets(i, 0)) == 0);

  const auto e1 = plan.epoch_batches(1), e2 = plan.epoch_batches(2);
  CHECK(e1.size() == 9);
  for (const auto& batches : {e1, e2}) {
    std::multiset<std::size_t> rows;
    for (const auto& b : batches) rows.insert(b.begin(), b.end());
    CHECK(rows.size() == 90);
    CHECK(std::set<std::size_t>(rows.begin(), rows.end()).size() == 90);
  }
  CHECK(e1 != e2);
  CHECK(e1 == plan.epoch_batches(1));

  const BatchPlan partial = split_and_batch(ds, 0, 25, 1);
  const auto b = partial.epoch_batches(0);
  CHECK(b.size() == 5);
  CHECK(b.back().size() == 3);

  const BatchPlan whole = split_and_batch(ds, 0, 103, 1);
  CHECK(whole.epoch_batches(0).size() == 1);

  CHECK_THROWS(split_and_batch(ds, 200, 10, 1));
}

TEST_CASE("validation split of the full training set size") {
  Dataset ds;
  ds.inputs = Matrix::Zero(60000, 1);
  ds.targets = Matrix::Zero(60000, 1);
  const BatchPlan plan = split_and_batch(ds, 5000, 128, 0);
  CHECK(plan.train().size() == 55000);
}
