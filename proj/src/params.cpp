#include "tommy/params.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "tommy/error.hpp"

namespace tommy {

namespace {
constexpr const char* kMagic = "tommy-ckpt-v1\n";
}

Tensor ParameterSet::create_zero(const std::string& name, Shape shape) {
  if (map_.count(name))
    throw Error(ErrorKind::state, "duplicate parameter name: " + name);
  Tensor t = Tensor::zeros(std::move(shape), true);
  map_.emplace(name, t);
  return t;
}

Tensor ParameterSet::create_uniform(const std::string& name, Shape shape,
                                    double lo, double hi) {
  Tensor t = create_zero(name, std::move(shape));
  Rng rng(mix_seed(init_seed_, fnv1a(name)));
  for (double& v : t.values()) v = uniform_real(rng, lo, hi);
  return t;
}

Tensor ParameterSet::at(const std::string& name) const {
  auto it = map_.find(name);
  if (it == map_.end())
    throw Error(ErrorKind::state, "unknown parameter: " + name);
  return it->second;
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(map_.size());
  for (const auto& [k, v] : map_) out.push_back(k);
  return out;
}

int ParameterSet::total_size() const {
  int n = 0;
  for (const auto& [k, v] : map_) n += v.size();
  return n;
}

void ParameterSet::zero_grads() {
  for (auto& [k, v] : map_) const_cast<Tensor&>(v).zero_grad();
}

double ParameterSet::grad_norm() const {
  double acc = 0.0;
  for (const auto& [k, v] : map_)
    for (double g : v.grad()) acc += g * g;
  return std::sqrt(acc);
}

void ParameterSet::scale_grads(double c) {
  for (auto& [k, v] : map_)
    for (double& g : const_cast<Tensor&>(v).grad()) g *= c;
}

void ParameterSet::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot open checkpoint for write: " + path);
  out.write(kMagic, static_cast<std::streamsize>(std::strlen(kMagic)));
  uint64_t count = map_.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& [name, t] : map_) {
    uint32_t len = static_cast<uint32_t>(name.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(name.data(), len);
    uint32_t rank = static_cast<uint32_t>(t.shape().size());
    out.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
    for (int d : t.shape()) {
      int64_t dim = d;
      out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    }
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.values().size() * sizeof(double)));
  }
  if (!out) throw Error(ErrorKind::io, "checkpoint write failed: " + path);
}

void ParameterSet::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open checkpoint: " + path);
  std::string magic(std::strlen(kMagic), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || magic != kMagic)
    throw Error(ErrorKind::schema,
                "not a tommy-ckpt-v1 checkpoint: " + path);
  uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (count != map_.size())
    throw Error(ErrorKind::config,
                "checkpoint parameter count mismatch: file has " +
                    std::to_string(count) + ", model has " +
                    std::to_string(map_.size()));
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string name(len, '\0');
    in.read(name.data(), len);
    uint32_t rank = 0;
    in.read(reinterpret_cast<char*>(&rank), sizeof(rank));
    Shape shape(rank);
    for (uint32_t d = 0; d < rank; ++d) {
      int64_t dim = 0;
      in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
      shape[d] = static_cast<int>(dim);
    }
    if (!in) throw Error(ErrorKind::parse, "truncated checkpoint: " + path);
    auto it = map_.find(name);
    if (it == map_.end())
      throw Error(ErrorKind::config, "checkpoint has unknown parameter: " + name);
    if (it->second.shape() != shape)
      throw Error(ErrorKind::config,
                  "checkpoint shape mismatch for " + name + ": file " +
                      shape_str(shape) + ", model " +
                      shape_str(it->second.shape()));
    in.read(reinterpret_cast<char*>(it->second.values().data()),
            static_cast<std::streamsize>(it->second.values().size() *
                                         sizeof(double)));
    if (!in) throw Error(ErrorKind::parse, "truncated checkpoint: " + path);
  }
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  if (other.map_.size() != map_.size())
    throw Error(ErrorKind::config, "parameter set size mismatch");
  auto it = map_.begin();
  auto jt = other.map_.begin();
  for (; it != map_.end(); ++it, ++jt) {
    if (it->first != jt->first || it->second.shape() != jt->second.shape())
      throw Error(ErrorKind::config, "parameter set layout mismatch");
    it->second.values() = jt->second.values();
  }
}

}  // namespace tommy
