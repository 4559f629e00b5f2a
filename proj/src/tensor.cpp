#include "dan/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "dan/errors.hpp"

namespace dan {

Tensor::Tensor(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != std::size_t(rows) * cols) {
    throw ShapeError("Tensor: " + std::to_string(values_.size()) + " values for shape " + shape_str());
  }
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double to_single(double v) { return static_cast<double>(static_cast<float>(v)); }

int ParameterStore::add_uniform(const std::string& name, int rows, int cols, double bound, Rng& rng) {
  Tensor t(rows, cols);
  for (auto& v : t.values()) v = to_single((2.0 * uniform01(rng) - 1.0) * bound);
  return add(name, std::move(t));
}

int ParameterStore::add(const std::string& name, Tensor value) {
  if (lookup_.count(name)) throw InvalidArgument("duplicate parameter name " + name);
  for (auto& v : value.values()) v = to_single(v);
  Entry e;
  e.name = name;
  e.grad = Tensor(value.rows(), value.cols());
  e.moment1 = Tensor(value.rows(), value.cols());
  e.moment2 = Tensor(value.rows(), value.cols());
  e.value = std::move(value);
  const int idx = static_cast<int>(entries_.size());
  entries_.push_back(std::move(e));
  lookup_[name] = idx;
  return idx;
}

int ParameterStore::index(const std::string& name) const {
  const auto it = lookup_.find(name);
  if (it == lookup_.end()) throw InvalidArgument("unknown parameter " + name);
  return it->second;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t total = 0;
  for (const auto& e : entries_) total += e.value.size();
  return total;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.grad.fill(0.0);
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  if (other.size() != size()) throw ShapeError("copy_values_from: parameter count differs");
  for (std::size_t i = 0; i < size(); ++i) {
    if (entries_[i].name != other[i].name || !entries_[i].value.same_shape(other[i].value)) {
      throw ShapeError("copy_values_from: mismatch at " + entries_[i].name);
    }
    entries_[i].value = other[i].value;
  }
}

std::vector<Tensor> ParameterStore::make_grad_buffers() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.emplace_back(e.value.rows(), e.value.cols());
  return out;
}

}  // namespace dan
