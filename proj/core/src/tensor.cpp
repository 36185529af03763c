#include "edm/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "edm/error.hpp"

namespace edm {

std::size_t shape_size(const Shape& dims) noexcept {
  if (dims.empty()) return 0;
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string shape_string(const Shape& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

namespace {

void check_dims(const Shape& dims) {
  if (dims.empty()) throw_error(ErrorKind::shape, "tensor needs at least one dimension");
  if (std::find(dims.begin(), dims.end(), std::size_t{0}) != dims.end())
    throw_error(ErrorKind::shape, "zero extent in " + shape_string(dims));
}

}  // namespace

template <typename T>
BasicTensor<T>::BasicTensor(Shape dims) : dims_(std::move(dims)) {
  check_dims(dims_);
  data_.assign(shape_size(dims_), T{0});
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape dims, std::vector<T> values)
    : dims_(std::move(dims)), data_(std::move(values)) {
  check_dims(dims_);
  if (shape_size(dims_) != data_.size())
    throw_error(ErrorKind::shape, shape_string(dims_) + " needs " +
                                      std::to_string(shape_size(dims_)) + " values, got " +
                                      std::to_string(data_.size()));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::filled(Shape dims, T value) {
  BasicTensor t(std::move(dims));
  t.fill(value);
  return t;
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape dims) const& {
  return BasicTensor(std::move(dims), data_);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape dims) && {
  return BasicTensor(std::move(dims), std::move(data_));
}

template <typename T>
void BasicTensor<T>::fill(T value) noexcept {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool BasicTensor<T>::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw_error(ErrorKind::shape,
                "matmul " + shape_string(a.dims()) + " x " + shape_string(b.dims()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  BasicTensor<T> out({m, n});
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  // i-t-j order: each out element still accumulates its t terms in ascending order.
  for (std::size_t i = 0; i < m; ++i) {
    T* row = po + i * n;
    for (std::size_t t = 0; t < k; ++t) {
      const T av = pa[i * k + t];
      const T* brow = pb + t * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return out;
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template BasicTensor<float> matmul(const BasicTensor<float>&, const BasicTensor<float>&);
template BasicTensor<double> matmul(const BasicTensor<double>&, const BasicTensor<double>&);

}  // namespace edm
