#pragma once

#include <functional>
#include <vector>

#include "dan/tensor.hpp"

namespace dan {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// lr0 * decay^floor(step / decay_every)
double scheduled_lr(long step, double lr0, double decay, long decay_every);

// One Adam update from the gradients in `store`, using the learning rate
// scheduled for the current step counter. Increments the counter, clears
// gradients, keeps parameters in single precision. Returns the lr applied.
// Throws TrainingDivergence naming the first parameter with a non-finite
// gradient; parameters are untouched in that case.
double adam_step(ParameterStore& store, double lr0, double decay, long decay_every, const AdamConfig& cfg = {});

double grad_norm(const ParameterStore& store);
// Rescales gradients to global norm <= max_norm. Returns the norm before.
double clip_grad_norm(ParameterStore& store, double max_norm);

// f(store, grads): loss value; when grads is non-null the function also
// accumulates d(loss)/d(parameters) into it.
using LossFn = std::function<double(const ParameterStore&, std::vector<Tensor>*)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central differences (f(t + eps) - f(t - eps)) / 2eps on `samples` randomly
// chosen coordinates (all of them when fewer exist), in double precision.
// Relative error is |a - n| / max(|a|, |n|, abs_floor).
GradCheckReport finite_diff_check(const LossFn& f, ParameterStore& store, double eps, std::size_t samples,
                                  std::uint64_t seed, double abs_floor = 1e-6);

}  // namespace dan
