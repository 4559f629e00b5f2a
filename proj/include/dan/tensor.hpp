#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dan/random.hpp"

namespace dan {

// Dense row-major matrix. Vectors are 1 x n.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols, double fill = 0.0) : rows_(rows), cols_(cols), values_(std::size_t(rows) * cols, fill) {}
  Tensor(int rows, int cols, std::vector<double> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_str() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

  double& operator()(int r, int c) { return values_[std::size_t(r) * cols_ + c]; }
  double operator()(int r, int c) const { return values_[std::size_t(r) * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double* row(int r) { return values_.data() + std::size_t(r) * cols_; }
  const double* row(int r) const { return values_.data() + std::size_t(r) * cols_; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  void fill(double v);
  bool all_finite() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

// Named learnable tensors with gradients and Adam moments. Parameter values
// are kept exactly representable in single precision; gradients and moments
// are double.
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor moment1;
    Tensor moment2;
  };

  // Uniform init on [-bound, bound], rounded to single precision.
  int add_uniform(const std::string& name, int rows, int cols, double bound, Rng& rng);
  int add(const std::string& name, Tensor value);

  int index(const std::string& name) const;
  bool contains(const std::string& name) const { return lookup_.count(name) != 0; }
  std::size_t size() const { return entries_.size(); }
  Entry& operator[](std::size_t i) { return entries_[i]; }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::size_t parameter_count() const;
  void zero_grad();
  // Copies values only; shapes and names must match.
  void copy_values_from(const ParameterStore& other);
  // Fresh zeroed gradient buffers shaped like the parameters.
  std::vector<Tensor> make_grad_buffers() const;

  // Optimizer step counter.
  long step = 0;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> lookup_;
};

double to_single(double v);

}  // namespace dan
