#include "edad/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace edad {

Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t = Tensor::matrix(rows, cols);
  for (auto& v : t.values()) v = static_cast<real>(rng.uniform(-bound, bound));
  return t;
}

BoundParams::BoundParams(Tape& tape, const ParamSet& params, bool trainable) {
  for (const auto& [name, value] : params)
    vars_.emplace(name, trainable ? tape.variable(value) : tape.constant(value));
}

Var BoundParams::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

ParamSet gradient(Var loss, const BoundParams& params) {
  std::vector<Var> vars;
  vars.reserve(params.vars().size());
  for (const auto& [name, v] : params.vars()) vars.push_back(v);
  auto grads = loss.tape()->gradient(loss, vars);
  ParamSet out;
  std::size_t i = 0;
  for (const auto& [name, v] : params.vars()) out.emplace(name, std::move(grads[i++]));
  return out;
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, real lr) {
  for (const auto& [name, p] : params)
    if (!grads.contains(name)) throw ContractError("adam_step: no gradient for '" + name + "'");
  ++state.step;
  const real t = static_cast<real>(state.step);
  const real c1 = real{1} - std::pow(AdamState::beta1, t);
  const real c2 = real{1} - std::pow(AdamState::beta2, t);
  for (auto& [name, p] : params) {
    const Tensor& g = grads.at(name);
    if (g.size() != p.size()) throw DimensionError("adam_step: gradient shape mismatch for '" + name + "'");
    auto& m = state.first_moment.try_emplace(name, p.shape(), real{0}).first->second;
    auto& v = state.second_moment.try_emplace(name, p.shape(), real{0}).first->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = AdamState::beta1 * m[i] + (1 - AdamState::beta1) * g[i];
      v[i] = AdamState::beta2 * v[i] + (1 - AdamState::beta2) * g[i] * g[i];
      const real m_hat = m[i] / c1;
      const real v_hat = v[i] / c2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + AdamState::epsilon);
    }
  }
}

void add_into(ParamSet& acc, const ParamSet& other) {
  for (const auto& [name, t] : other) {
    auto it = acc.find(name);
    if (it == acc.end())
      acc.emplace(name, t);
    else
      it->second += t;
  }
}

void scale_all(ParamSet& params, real s) {
  for (auto& [name, t] : params) t *= s;
}

bool all_finite(const ParamSet& params) {
  for (const auto& [name, t] : params)
    if (!t.all_finite()) return false;
  return true;
}

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const ParamSet& params) {
  std::string out(kCheckpointMagic);
  for (const auto& [name, t] : params) {
    put_u64(out, name.size());
    out += name;
    put_u64(out, t.rank());
    for (auto e : t.shape()) put_u64(out, e);
    for (auto v : t.values()) put_f64(out, static_cast<double>(v));
  }
  return out;
}

ParamSet decode_checkpoint(const std::string& bytes) {
  const std::string magic(kCheckpointMagic);
  if (bytes.compare(0, magic.size(), magic) != 0) throw CheckpointError("unknown checkpoint magic");
  Reader r(bytes);
  r.str(magic.size());
  ParamSet out;
  constexpr std::uint64_t kSane = std::uint64_t{1} << 40;
  while (!r.done()) {
    const auto name_len = r.u64();
    if (name_len > kSane) throw CheckpointError("implausible name length");
    std::string name = r.str(static_cast<std::size_t>(name_len));
    const auto rank = r.u64();
    if (rank > 16) throw CheckpointError("implausible rank for '" + name + "'");
    Shape shape;
    std::uint64_t count = 1;
    for (std::uint64_t i = 0; i < rank; ++i) {
      const auto e = r.u64();
      if (e == 0 || e > kSane) throw CheckpointError("bad extent for '" + name + "'");
      shape.push_back(static_cast<std::size_t>(e));
      count *= e;
      if (count > kSane) throw CheckpointError("tensor too large: '" + name + "'");
    }
    std::vector<real> data(static_cast<std::size_t>(count));
    for (auto& v : data) v = static_cast<real>(r.f64());
    if (!out.emplace(name, Tensor(std::move(shape), std::move(data))).second)
      throw CheckpointError("duplicate tensor '" + name + "'");
  }
  return out;
}

void write_checkpoint(const std::filesystem::path& path, const ParamSet& params) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_checkpoint(params);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CheckpointError("write failed: " + path.string());
}

ParamSet read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace edad
