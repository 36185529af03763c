#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace edm {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& dims) noexcept;
std::string shape_string(const Shape& dims);

// Dense row-major array. float is the working precision; double exists for
// finite-difference gradient checks.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  // Zero-filled tensor. Throws a shape error for an empty dims list or a zero extent.
  explicit BasicTensor(Shape dims);
  BasicTensor(Shape dims, std::vector<T> values);

  static BasicTensor zeros(Shape dims) { return BasicTensor(std::move(dims)); }
  static BasicTensor filled(Shape dims, T value);

  const Shape& dims() const noexcept { return dims_; }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  // Same flat data under new extents; element count must match.
  BasicTensor reshaped(Shape dims) const&;
  BasicTensor reshaped(Shape dims) &&;

  void fill(T value) noexcept;
  bool all_finite() const noexcept;

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(dims_, std::move(out));
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  Shape dims_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

// out[i][j] = sum over t ascending of a[i][t] * b[t][j].
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;

}  // namespace edm
