#include "dan/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dan/errors.hpp"

namespace dan {

double scheduled_lr(long step, double lr0, double decay, long decay_every) {
  if (decay_every <= 0) return lr0;
  return lr0 * std::pow(decay, static_cast<double>(step / decay_every));
}

double adam_step(ParameterStore& store, double lr0, double decay, long decay_every, const AdamConfig& cfg) {
  for (const auto& e : store) {
    if (!e.grad.all_finite()) throw TrainingDivergence("non-finite gradient in parameter " + e.name);
  }
  const double lr = scheduled_lr(store.step, lr0, decay, decay_every);
  const long t = store.step + 1;
  const double correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (auto& e : store) {
    auto& w = e.value.values();
    const auto& grad = e.grad.values();
    auto& m1 = e.moment1.values();
    auto& m2 = e.moment2.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * grad[i];
      m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double m_hat = m1[i] / correction1;
      const double v_hat = m2[i] / correction2;
      w[i] = to_single(w[i] - lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
    }
  }
  store.step = t;
  store.zero_grad();
  return lr;
}

double grad_norm(const ParameterStore& store) {
  double sq = 0.0;
  for (const auto& e : store) {
    for (double v : e.grad.values()) sq += v * v;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(ParameterStore& store, double max_norm) {
  const double norm = grad_norm(store);
  if (std::isfinite(norm) && norm > max_norm && max_norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto& e : store) {
      for (auto& v : e.grad.values()) v *= factor;
    }
  }
  return norm;
}

GradCheckReport finite_diff_check(const LossFn& f, ParameterStore& store, double eps, std::size_t samples,
                                  std::uint64_t seed, double abs_floor) {
  std::vector<Tensor> analytic = store.make_grad_buffers();
  f(store, &analytic);

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < store.size(); ++p) {
    for (std::size_t i = 0; i < store[p].value.size(); ++i) coords.emplace_back(p, i);
  }
  if (samples < coords.size()) {
    Rng rng(seed);
    // Partial Fisher-Yates: the first `samples` entries become the sample.
    for (std::size_t i = 0; i < samples; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (coords.size() - i));
      std::swap(coords[i], coords[j]);
    }
    coords.resize(samples);
  }

  GradCheckReport report;
  for (const auto& [p, i] : coords) {
    double& theta = store[p].value[i];
    const double saved = theta;
    theta = saved + eps;
    const double up = f(store, nullptr);
    theta = saved - eps;
    const double down = f(store, nullptr);
    theta = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[p][i];
    const double denom = std::max({std::abs(a), std::abs(numeric), abs_floor});
    const double rel = std::abs(a - numeric) / denom;
    ++report.coords_checked;
    if (report.coords_checked == 1 || rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_param = p;
      report.worst_index = i;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace dan
