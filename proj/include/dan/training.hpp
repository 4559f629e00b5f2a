#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dan/env.hpp"
#include "dan/model.hpp"
#include "dan/random.hpp"

namespace dan {

struct TrainerConfig {
  ModelConfig model;
  int batch_instances = 8;
  int n_min = 20;
  int n_max = 100;
  int m_min = 5;
  int m_max = 10;
  // Second curriculum phase: from this step on, n_max becomes n_max_refine.
  // Negative disables the switch.
  long refine_from_step = -1;
  int n_max_refine = 200;

  double lr0 = 1e-5;
  double lr_decay = 0.96;
  long lr_decay_every = 1024;
  double grad_clip = 5.0;

  int validation_size = 64;
  double refresh_margin = 0.01;
  int refresh_every = 100;

  long steps = 1000;
  int checkpoint_every = 100;
  int workers = 1;
  std::uint64_t seed = 1;

  // d = 32, n in [8, 16], m in [2, 3].
  static TrainerConfig desk();
  void validate() const;
};

std::string trainer_config_to_json(const TrainerConfig& cfg);
TrainerConfig trainer_config_from_json(const std::string& text);

struct TrainingState {
  TrainerConfig config;
  DanParameters train;
  DanParameters baseline;
  Rng rng;
  long step = 0;
};

TrainingState init_training(const TrainerConfig& cfg);

// One stochastic episode under the training parameters, with observations
// and log-probabilities recorded at selection time.
Episode collect_episode(const MtspInstance& inst, const DanParameters& params, double dg, double clip_c, Rng& rng);

// b = -minmax of one greedy episode under the frozen baseline parameters.
double baseline_rollout(const MtspInstance& inst, const DanParameters& baseline, double dg, double clip_c);

// Adds the gradient of the surrogate loss
//   L = -(1/B) sum_e (R_e - b_e) sum_{records of e} log p(action)
// into params.store gradients. Per-episode work may run on `workers`
// threads; the reduction runs in episode order, so the result is identical
// for any worker count. Returns L.
double compute_gradient(std::span<const Trajectory> batch, std::span<const double> baselines, DanParameters& params,
                        double clip_c, int workers = 1);

struct TrainMetrics {
  long step = 0;
  double mean_reward = 0.0;
  double mean_advantage = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
  bool baseline_refreshed = false;
  double wall_ms = 0.0;
  // Per-episode R and b of the batch, for variance diagnostics.
  std::vector<double> rewards;
  std::vector<double> baselines;
};

TrainMetrics train_step(TrainingState& state);

struct RefreshResult {
  bool refreshed = false;
  double train_mean = 0.0;
  double baseline_mean = 0.0;
};

// Greedy evaluation of both parameter sets on validation_size fresh
// instances; copies train into baseline when its mean minmax is lower by
// more than the relative margin.
RefreshResult refresh_baseline(TrainingState& state);

// Mean greedy minmax over the given instances.
double mean_greedy_cost(std::span<const MtspInstance> instances, const DanParameters& params, double dg,
                        int workers = 1);

// {step, mean_reward, mean_advantage, grad_norm, lr, baseline_refreshed, wall_ms}
std::string metrics_to_json_line(const TrainMetrics& m);

void save_checkpoint(const TrainingState& state, const std::string& path);
TrainingState load_checkpoint(const std::string& path);

// Inference parameters from a checkpoint: the baseline (best so far) store.
// Throws ShapeError when `expected` is given and disagrees with the file.
DanParameters load_model(const std::string& path);
DanParameters load_model(const std::string& path, const ModelConfig& expected);
// Single-model checkpoint for inference.
void save_model(const DanParameters& params, const std::string& path);

}  // namespace dan
