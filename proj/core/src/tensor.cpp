#include "taco/tensor.hpp"

#include <cmath>
#include <sstream>

#include "taco/error.hpp"

namespace taco::nn {

std::string Shape4::str() const {
  std::ostringstream ss;
  ss << '(' << n << ',' << c << ',' << h << ',' << w << ')';
  return ss.str();
}

Tensor4& Tensor4::operator+=(const Tensor4& other) {
  if (!(shape_ == other.shape_)) throw ShapeError("tensor add: shape mismatch " + shape_.str() + " vs " + other.shape_.str());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

void check_finite(const Tensor4& t, const char* op) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i])) throw NumericError(std::string(op) + ": non-finite value in output");
  }
}

}  // namespace taco::nn
