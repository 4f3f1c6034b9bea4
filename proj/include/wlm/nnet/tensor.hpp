#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wlm::nn {

/// Dense row-major tensor.
template <class T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(std::vector<std::size_t> shape, T fill = T{})
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}
  BasicTensor(std::vector<std::size_t> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
      throw std::invalid_argument("tensor: data length does not match shape");
    }
  }

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }
  std::vector<T>& values() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// Row r of a tensor viewed as [dim(0), size/dim(0)].
  std::span<T> row(std::size_t r) {
    const std::size_t w = data_.size() / shape_.at(0);
    return std::span<T>(data_).subspan(r * w, w);
  }
  std::span<const T> row(std::size_t r) const {
    const std::size_t w = data_.size() / shape_.at(0);
    return std::span<const T>(data_).subspan(r * w, w);
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool operator==(const BasicTensor&) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

/// Ordered collection of named tensors. Order is fixed at construction and
/// defines the checkpoint layout.
template <class T>
class BasicParams {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape) {
    for (const auto& n : names_) {
      if (n == name) throw std::invalid_argument("duplicate parameter " + name);
    }
    names_.push_back(std::move(name));
    tensors_.emplace_back(std::move(shape));
    return tensors_.size() - 1;
  }

  std::size_t size() const noexcept { return tensors_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  BasicTensor<T>& operator[](std::size_t i) { return tensors_[i]; }
  const BasicTensor<T>& operator[](std::size_t i) const { return tensors_[i]; }

  std::size_t index(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return i;
    }
    throw std::out_of_range("no parameter named " + name);
  }
  bool contains(const std::string& name) const {
    for (const auto& n : names_) {
      if (n == name) return true;
    }
    return false;
  }

  std::size_t num_elements() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  /// Same names and shapes, zero-filled.
  BasicParams zeros_like() const {
    BasicParams out;
    for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], tensors_[i].shape());
    return out;
  }

  void zero() {
    for (auto& t : tensors_) t.fill(T(0));
  }

  template <class U>
  BasicParams<U> cast() const {
    BasicParams<U> out;
    for (std::size_t i = 0; i < size(); ++i) {
      out.add(names_[i], tensors_[i].shape());
      auto& dst = out[i];
      for (std::size_t j = 0; j < tensors_[i].size(); ++j) dst[j] = static_cast<U>(tensors_[i][j]);
    }
    return out;
  }

  bool operator==(const BasicParams&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<BasicTensor<T>> tensors_;
};

using Params = BasicParams<float>;

}  // namespace wlm::nn
