#pragma once

#include <map>
#include <string>
#include <vector>

#include "taco/tensor.hpp"

namespace taco::nn {

struct Parameter {
  Tensor4 value;
  Tensor4 grad;
  Tensor4 velocity;
  bool has_grad = false;

  // Adds `g` into the gradient buffer and marks it populated.
  void accumulate(const Tensor4& g);
};

// Named trainable parameters with their momentum buffers. Iteration order is
// the lexicographic name order, which also fixes the checkpoint layout.
class ParamSet {
 public:
  Parameter& add(const std::string& name, Shape4 shape);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  std::map<std::string, Parameter>& entries() { return params_; }
  const std::map<std::string, Parameter>& entries() const { return params_; }

  void zero_grad();

 private:
  std::map<std::string, Parameter> params_;
};

struct SgdOptions {
  double lr = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.0001;
};

// v <- momentum * v + grad + weight_decay * p;  p <- p - lr * v; grads zeroed.
// Throws StateError if any parameter has no gradient.
void sgd_step(ParamSet& params, const SgdOptions& options);

}  // namespace taco::nn
