#pragma once

#include <map>
#include <string>
#include <vector>

#include "tommy/rng.hpp"
#include "tommy/tensor.hpp"

namespace tommy {

// Named trainable tensors with deterministic iteration order (name-sorted).
// Initialization draws from a per-parameter rng derived from (init_seed,
// name), so creation order does not matter.
class ParameterSet {
 public:
  explicit ParameterSet(uint64_t init_seed = 0) : init_seed_(init_seed) {}

  Tensor create_zero(const std::string& name, Shape shape);
  Tensor create_uniform(const std::string& name, Shape shape, double lo,
                        double hi);

  bool contains(const std::string& name) const { return map_.count(name) > 0; }
  Tensor at(const std::string& name) const;
  std::vector<std::string> names() const;
  size_t count() const { return map_.size(); }
  int total_size() const;

  void zero_grads();
  double grad_norm() const;
  void scale_grads(double c);

  // Checkpoint: "tommy-ckpt-v1" header, then name -> shape -> raw doubles.
  void save(const std::string& path) const;
  void load(const std::string& path);  // names/shapes must match exactly

  void copy_values_from(const ParameterSet& other);

  auto begin() const { return map_.begin(); }
  auto end() const { return map_.end(); }

 private:
  uint64_t init_seed_;
  std::map<std::string, Tensor> map_;
};

}  // namespace tommy
