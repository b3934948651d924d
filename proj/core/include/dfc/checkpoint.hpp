#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dfc/network.hpp"
#include "dfc/plasticity.hpp"

namespace dfc {

/// Named tensors in a simple binary container:
///   "DFCCKPT 1\n", then per tensor "name rows cols\n" followed by
///   rows*cols little-endian doubles (column-major), then
///   "sha256 <hex>\n" over every preceding byte.
struct Checkpoint {
  std::vector<std::pair<std::string, Matrix>> tensors;

  void put(const std::string& name, const Matrix& m);
  const Matrix& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

std::string serialize(const Checkpoint& ckpt);
Checkpoint deserialize(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws ParseError on a malformed file or a digest mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);

/// W{i}, b{i}, Q{i} plus activation codes; i is 1-based.
void store_params(Checkpoint& ckpt, const NetworkParams& params);
NetworkParams restore_params(const Checkpoint& ckpt);

void store_optimizer(Checkpoint& ckpt, const std::string& prefix, const Optimizer& opt);
void restore_optimizer(const Checkpoint& ckpt, const std::string& prefix, Optimizer& opt);

}  // namespace dfc
