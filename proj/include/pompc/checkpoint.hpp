// SPDX-License-Identifier: Apache-2.0
#pragma once

// Single-file checkpoint container. Layout (little-endian, see docs/FORMATS.md):
//   magic "POMPCCK1", u32 version, string config snapshot, u64 block count,
//   then per block: string name, u8 kind, payload.
//   kind 0 (tensor): u32 rank, u64 dims[rank], f64 data (row-major).
//   kind 1 (bytes):  string.
// Strings are u64 length + raw bytes.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pompc/binio.hpp"
#include "pompc/nnet.hpp"

namespace pompc {

struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<double> data;
};

class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  std::string config_text;

  void put_tensor(const std::string& name, Tensor t) {
    check_new(name);
    tensors_[name] = std::move(t);
    order_.push_back(name);
  }

  void put_mat(const std::string& name, const Mat& m) {
    Tensor t;
    t.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
    t.data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(m(r, c));
    put_tensor(name, std::move(t));
  }

  void put_vec(const std::string& name, const Vec& v) {
    Tensor t;
    t.shape = {static_cast<std::uint64_t>(v.size())};
    t.data.assign(v.data(), v.data() + v.size());
    put_tensor(name, std::move(t));
  }

  void put_scalar(const std::string& name, double v) { put_tensor(name, Tensor{{}, {v}}); }

  void put_bytes(const std::string& name, std::string bytes) {
    check_new(name);
    bytes_[name] = std::move(bytes);
    order_.push_back(name);
  }

  bool has(const std::string& name) const { return tensors_.count(name) != 0 || bytes_.count(name) != 0; }

  const Tensor& tensor(const std::string& name) const {
    const auto it = tensors_.find(name);
    if (it == tensors_.end()) throw binio::FormatError("checkpoint: missing tensor block '" + name + "'");
    return it->second;
  }

  Mat mat(const std::string& name, Eigen::Index rows, Eigen::Index cols) const {
    const Tensor& t = tensor(name);
    if (t.shape.size() != 2 || t.shape[0] != static_cast<std::uint64_t>(rows) ||
        t.shape[1] != static_cast<std::uint64_t>(cols))
      throw binio::FormatError("checkpoint: block '" + name + "' has the wrong shape");
    Mat m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = t.data[k++];
    return m;
  }

  Vec vec(const std::string& name, Eigen::Index n) const {
    const Tensor& t = tensor(name);
    if (t.shape.size() != 1 || t.shape[0] != static_cast<std::uint64_t>(n))
      throw binio::FormatError("checkpoint: block '" + name + "' has the wrong shape");
    return Eigen::Map<const Vec>(t.data.data(), n);
  }

  double scalar(const std::string& name) const {
    const Tensor& t = tensor(name);
    if (!t.shape.empty() || t.data.size() != 1) throw binio::FormatError("checkpoint: block '" + name + "' is not a scalar");
    return t.data[0];
  }

  const std::string& bytes(const std::string& name) const {
    const auto it = bytes_.find(name);
    if (it == bytes_.end()) throw binio::FormatError("checkpoint: missing byte block '" + name + "'");
    return it->second;
  }

  /// Layer weights and biases as `<prefix>.<i>.weight` / `.bias`.
  void put_mlp(const std::string& prefix, const Mlp& net) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      put_mat(prefix + "." + std::to_string(i) + ".weight", net.layers[i].weight);
      put_vec(prefix + "." + std::to_string(i) + ".bias", net.layers[i].bias);
    }
  }

  /// Restores parameters into an already-shaped network.
  void get_mlp(const std::string& prefix, Mlp& net) const {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      Layer& l = net.layers[i];
      l.weight = mat(prefix + "." + std::to_string(i) + ".weight", l.weight.rows(), l.weight.cols());
      l.bias = vec(prefix + "." + std::to_string(i) + ".bias", l.bias.size());
    }
  }

  void write(std::ostream& os) const {
    os.write("POMPCCK1", 8);
    binio::put<std::uint32_t>(os, kVersion);
    binio::put_string(os, config_text);
    binio::put<std::uint64_t>(os, order_.size());
    for (const auto& name : order_) {
      binio::put_string(os, name);
      if (const auto it = tensors_.find(name); it != tensors_.end()) {
        binio::put<std::uint8_t>(os, 0);
        binio::put<std::uint32_t>(os, static_cast<std::uint32_t>(it->second.shape.size()));
        for (auto d : it->second.shape) binio::put<std::uint64_t>(os, d);
        for (double v : it->second.data) binio::put<double>(os, v);
      } else {
        binio::put<std::uint8_t>(os, 1);
        binio::put_string(os, bytes_.at(name));
      }
    }
  }

  static Checkpoint read(std::istream& is) {
    binio::expect_magic(is, "POMPCCK1");
    const auto version = binio::get<std::uint32_t>(is);
    if (version != kVersion) throw binio::FormatError("unsupported checkpoint version " + std::to_string(version));
    Checkpoint ck;
    ck.config_text = binio::get_string(is);
    const auto n = binio::get<std::uint64_t>(is);
    for (std::uint64_t b = 0; b < n; ++b) {
      std::string name = binio::get_string(is, 1 << 16);
      const auto kind = binio::get<std::uint8_t>(is);
      if (kind == 0) {
        Tensor t;
        const auto rank = binio::get<std::uint32_t>(is);
        if (rank > 8) throw binio::FormatError("checkpoint: tensor rank too large in '" + name + "'");
        std::uint64_t count = 1;
        for (std::uint32_t k = 0; k < rank; ++k) {
          t.shape.push_back(binio::get<std::uint64_t>(is));
          count *= t.shape.back();
        }
        if (count > (1ULL << 32)) throw binio::FormatError("checkpoint: tensor '" + name + "' too large");
        t.data.resize(static_cast<std::size_t>(count));
        for (auto& v : t.data) v = binio::get<double>(is);
        ck.put_tensor(name, std::move(t));
      } else if (kind == 1) {
        ck.put_bytes(name, binio::get_string(is));
      } else {
        throw binio::FormatError("checkpoint: unknown block kind in '" + name + "'");
      }
    }
    return ck;
  }

  void save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw binio::FormatError("cannot open '" + path + "' for writing");
    write(os);
    if (!os) throw binio::FormatError("write to '" + path + "' failed");
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw binio::FormatError("cannot open checkpoint '" + path + "'");
    return read(is);
  }

  const std::vector<std::string>& block_names() const { return order_; }

 private:
  void check_new(const std::string& name) const {
    if (has(name)) throw std::invalid_argument("checkpoint: duplicate block '" + name + "'");
  }

  std::map<std::string, Tensor> tensors_;
  std::map<std::string, std::string> bytes_;
  std::vector<std::string> order_;
};

}  // namespace pompc
