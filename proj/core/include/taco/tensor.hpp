#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

namespace taco::nn {

struct Shape4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::size_t size() const { return static_cast<std::size_t>(n) * c * h * w; }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

// Dense NCHW single-precision tensor with value semantics.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, float fill = 0.0f) : shape_(shape), data_(shape.size(), fill) {}
  Tensor4(int n, int c, int h, int w, float fill = 0.0f) : Tensor4(Shape4{n, c, h, w}, fill) {}

  const Shape4& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  // Elements per batch item.
  std::size_t item_size() const { return static_cast<std::size_t>(shape_.c) * shape_.h * shape_.w; }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> item(int i) { return {data_.data() + i * item_size(), item_size()}; }
  std::span<const float> item(int i) const { return {data_.data() + i * item_size(), item_size()}; }
  std::vector<float>& values() { return data_; }
  const std::vector<float>& values() const { return data_; }

  float& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  float at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }
  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  void fill(float v) { std::fill(data_.begin(), data_.end(), v); }
  Tensor4& operator+=(const Tensor4& other);

  bool operator==(const Tensor4&) const = default;

 private:
  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }

  Shape4 shape_;
  std::vector<float> data_;
};

// Throws NumericError naming `op` if any element is NaN or infinite.
void check_finite(const Tensor4& t, const char* op);

}  // namespace taco::nn
