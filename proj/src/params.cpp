#include "radar/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "radar/error.hpp"

namespace radar {

int ParamSet::add(std::string name, ad::Tensor init) {
  if (contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(std::move(init));
  return static_cast<int>(values_.size()) - 1;
}

int ParamSet::add_uniform(std::string name, Eigen::Index rows, Eigen::Index cols, double fan_in,
                          Rng& rng) {
  const double bound = 1.0 / std::sqrt(fan_in);
  ad::Tensor t(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) t(i, j) = bound * (2.0 * uniform01(rng) - 1.0);
  }
  return add(std::move(name), std::move(t));
}

int ParamSet::add_constant(std::string name, Eigen::Index rows, Eigen::Index cols, double value) {
  return add(std::move(name), ad::Tensor::Constant(rows, cols, value));
}

int ParamSet::index(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  throw ConfigError("no parameter named '" + std::string(name) + "'");
}

bool ParamSet::contains(std::string_view name) const {
  for (const auto& n : names_) {
    if (n == name) return true;
  }
  return false;
}

std::vector<ad::Tensor> ParamSet::zeros_like() const {
  std::vector<ad::Tensor> out;
  out.reserve(values_.size());
  for (const auto& v : values_) out.push_back(ad::Tensor::Zero(v.rows(), v.cols()));
  return out;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t total = 0;
  for (const auto& v : values_) total += static_cast<std::size_t>(v.size());
  return total;
}

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

void put_f32(std::string& out, float v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }

  float f32() {
    need(4);
    float v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }

  std::string text(std::size_t len) {
    need(len);
    std::string s(bytes_.substr(pos_, len));
    pos_ += len;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t len) const {
    if (pos_ + len > bytes_.size()) {
      throw ParseError("checkpoint truncated at byte " + std::to_string(pos_));
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const ParamSet& params, std::string_view config_text) {
  std::string out = "RDR1";
  put_u32(out, static_cast<std::uint32_t>(config_text.size()));
  out.append(config_text);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (std::size_t s = 0; s < params.size(); ++s) {
    const int slot = static_cast<int>(s);
    const auto& name = params.name(slot);
    const auto& v = params.value(slot);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    put_u32(out, 2);
    put_u32(out, static_cast<std::uint32_t>(v.rows()));
    put_u32(out, static_cast<std::uint32_t>(v.cols()));
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      for (Eigen::Index j = 0; j < v.cols(); ++j) put_f32(out, static_cast<float>(v(i, j)));
    }
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  ByteReader in(bytes);
  if (in.text(4) != "RDR1") throw ParseError("checkpoint: bad magic");
  Checkpoint ckpt;
  ckpt.config_text = in.text(in.u32());
  const std::uint32_t count = in.u32();
  for (std::uint32_t r = 0; r < count; ++r) {
    ckpt.names.push_back(in.text(in.u32()));
    if (in.u32() != 2) throw ParseError("checkpoint: only rank-2 records are supported");
    const std::uint32_t rows = in.u32();
    const std::uint32_t cols = in.u32();
    ad::Tensor t(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) t(i, j) = in.f32();
    }
    ckpt.values.push_back(std::move(t));
  }
  if (!in.at_end()) throw ParseError("checkpoint: trailing bytes");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const ParamSet& params,
                      std::string_view config_text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << serialize_checkpoint(params, config_text);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

void load_into(const Checkpoint& ckpt, ParamSet& params) {
  if (ckpt.names.size() != params.size()) {
    throw ConfigError("checkpoint has " + std::to_string(ckpt.names.size()) +
                      " tensors, model expects " + std::to_string(params.size()));
  }
  for (std::size_t s = 0; s < params.size(); ++s) {
    const int slot = static_cast<int>(s);
    if (ckpt.names[s] != params.name(slot)) {
      throw ConfigError("checkpoint tensor " + std::to_string(s) + " is '" + ckpt.names[s] +
                        "', expected '" + params.name(slot) + "'");
    }
    const auto& src = ckpt.values[s];
    auto& dst = params.value(slot);
    if (src.rows() != dst.rows() || src.cols() != dst.cols()) {
      throw ConfigError("shape mismatch for '" + params.name(slot) + "'");
    }
    dst = src;
  }
}

}  // namespace radar
