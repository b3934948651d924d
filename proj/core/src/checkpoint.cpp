#include "dfc/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <openssl/evp.h>

#include "dfc/errors.hpp"

namespace dfc {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void Checkpoint::put(const std::string& name, const Matrix& m) {
  if (name.empty() || name.find_first_of(" \n") != std::string::npos) {
    throw ShapeError("checkpoint tensor name must be a single token");
  }
  for (auto& [n, t] : tensors) {
    if (n == name) {
      t = m;
      return;
    }
  }
  tensors.emplace_back(name, m);
}

const Matrix& Checkpoint::get(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw ParseError("checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return true;
  }
  return false;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string serialize(const Checkpoint& ckpt) {
  std::string out = "DFCCKPT 1\n";
  for (const auto& [name, m] : ckpt.tensors) {
    out += name + " " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    const auto bytes = static_cast<std::size_t>(m.size()) * sizeof(double);
    const std::size_t at = out.size();
    out.resize(at + bytes);
    if (bytes > 0) std::memcpy(out.data() + at, m.data(), bytes);
  }
  out += "sha256 " + sha256_hex(out) + "\n";
  return out;
}

namespace {

std::string read_line(const std::string& bytes, std::size_t& pos) {
  const auto nl = bytes.find('\n', pos);
  if (nl == std::string::npos) throw ParseError("checkpoint: unterminated header line at offset " + std::to_string(pos));
  std::string line = bytes.substr(pos, nl - pos);
  pos = nl + 1;
  return line;
}

}  // namespace

Checkpoint deserialize(const std::string& bytes) {
  std::size_t pos = 0;
  if (read_line(bytes, pos) != "DFCCKPT 1") throw ParseError("checkpoint: bad magic at offset 0");
  Checkpoint ckpt;
  while (true) {
    const std::size_t line_start = pos;
    const std::string line = read_line(bytes, pos);
    if (line.rfind("sha256 ", 0) == 0) {
      const std::string expected = sha256_hex(bytes.substr(0, line_start));
      if (line.substr(7) != expected) throw ParseError("checkpoint: digest mismatch at offset " + std::to_string(line_start));
      if (pos != bytes.size()) throw ParseError("checkpoint: trailing bytes at offset " + std::to_string(pos));
      return ckpt;
    }
    std::istringstream hdr(line);
    std::string name;
    long long rows = -1, cols = -1;
    if (!(hdr >> name >> rows >> cols) || rows < 0 || cols < 0) {
      throw ParseError("checkpoint: bad tensor header at offset " + std::to_string(line_start));
    }
    const auto count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    if (pos + count * sizeof(double) > bytes.size()) {
      throw ParseError("checkpoint: truncated tensor '" + name + "' at offset " + std::to_string(pos));
    }
    Matrix m(rows, cols);
    if (count > 0) std::memcpy(m.data(), bytes.data() + pos, count * sizeof(double));
    pos += count * sizeof(double);
    ckpt.tensors.emplace_back(std::move(name), std::move(m));
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

void store_params(Checkpoint& ckpt, const NetworkParams& params) {
  Matrix acts(static_cast<Eigen::Index>(params.depth()), 1);
  for (std::size_t i = 0; i < params.depth(); ++i) {
    const auto& l = params.layers[i];
    const std::string k = std::to_string(i + 1);
    ckpt.put("W" + k, l.W);
    ckpt.put("b" + k, l.b);
    ckpt.put("Q" + k, l.Q);
    acts(static_cast<Eigen::Index>(i), 0) = l.activation == Activation::tanh ? 0.0 : 1.0;
  }
  ckpt.put("activations", acts);
}

NetworkParams restore_params(const Checkpoint& ckpt) {
  const Matrix& acts = ckpt.get("activations");
  NetworkParams params;
  for (Eigen::Index i = 0; i < acts.rows(); ++i) {
    const std::string k = std::to_string(i + 1);
    Layer l;
    l.W = ckpt.get("W" + k);
    l.b = ckpt.get("b" + k);
    l.Q = ckpt.get("Q" + k);
    l.activation = acts(i, 0) == 0.0 ? Activation::tanh : Activation::linear;
    params.layers.push_back(std::move(l));
  }
  params.validate();
  return params;
}

void store_optimizer(Checkpoint& ckpt, const std::string& prefix, const Optimizer& opt) {
  ckpt.put(prefix + ".steps", Matrix::Constant(1, 1, static_cast<double>(opt.step_count())));
  for (std::size_t i = 0; i < opt.first_moments().size(); ++i) {
    ckpt.put(prefix + ".m" + std::to_string(i), opt.first_moments()[i]);
    ckpt.put(prefix + ".v" + std::to_string(i), opt.second_moments()[i]);
  }
}

void restore_optimizer(const Checkpoint& ckpt, const std::string& prefix, Optimizer& opt) {
  if (!ckpt.has(prefix + ".steps")) return;
  const auto steps = static_cast<std::size_t>(ckpt.get(prefix + ".steps")(0, 0));
  std::vector<Vector> m, v;
  for (std::size_t i = 0; ckpt.has(prefix + ".m" + std::to_string(i)); ++i) {
    m.push_back(ckpt.get(prefix + ".m" + std::to_string(i)));
    v.push_back(ckpt.get(prefix + ".v" + std::to_string(i)));
  }
  opt.restore(steps, std::move(m), std::move(v));
}

}  // namespace dfc
