#include "taco/optim.hpp"

#include "taco/error.hpp"

namespace taco::nn {

void Parameter::accumulate(const Tensor4& g) {
  if (!(g.shape() == value.shape())) {
    throw ShapeError("gradient shape " + g.shape().str() + " does not match parameter " + value.shape().str());
  }
  if (grad.empty()) grad = Tensor4(value.shape());
  grad += g;
  has_grad = true;
}

Parameter& ParamSet::add(const std::string& name, Shape4 shape) {
  if (params_.count(name)) throw ContractError("duplicate parameter name " + name);
  Parameter& p = params_[name];
  p.value = Tensor4(shape);
  p.grad = Tensor4(shape);
  p.velocity = Tensor4(shape);
  return p;
}

Parameter& ParamSet::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter " + name);
  return it->second;
}

const Parameter& ParamSet::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("unknown parameter " + name);
  return it->second;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& [name, p] : params_) {
    p.grad.fill(0.0f);
    p.has_grad = false;
  }
}

void sgd_step(ParamSet& params, const SgdOptions& options) {
  for (const auto& [name, p] : params.entries()) {
    if (!p.has_grad) throw StateError("sgd_step: parameter " + name + " has no gradient");
  }
  const auto lr = static_cast<float>(options.lr);
  const auto mom = static_cast<float>(options.momentum);
  const auto wd = static_cast<float>(options.weight_decay);
  for (auto& [name, p] : params.entries()) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      p.velocity[i] = mom * p.velocity[i] + p.grad[i] + wd * p.value[i];
      p.value[i] -= lr * p.velocity[i];
    }
  }
  params.zero_grad();
}

}  // namespace taco::nn
