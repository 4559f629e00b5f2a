#include "dan/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dan/checkpoint.hpp"
#include "dan/errors.hpp"
#include "dan/optim.hpp"
#include "dan/parallel.hpp"

namespace dan {

using nlohmann::json;

TrainerConfig TrainerConfig::desk() {
  TrainerConfig cfg;
  cfg.model.d = 32;
  cfg.n_min = 8;
  cfg.n_max = 16;
  cfg.m_min = 2;
  cfg.m_max = 3;
  cfg.steps = 2000;
  cfg.lr0 = 1e-3;
  cfg.validation_size = 64;
  cfg.refresh_every = 50;
  return cfg;
}

void TrainerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw InvalidArgument("trainer config: " + msg); };
  if (batch_instances < 1) fail("batch_instances must be >= 1");
  if (n_min < 2 || n_max < n_min) fail("n range must be nonempty with n >= 2");
  if (m_min < 1 || m_max < m_min) fail("m range must be nonempty with m >= 1");
  if (refine_from_step >= 0 && n_max_refine < n_min) fail("n_max_refine below n_min");
  if (validation_size < 1) fail("validation_size must be >= 1");
  if (!(refresh_margin > 0.0)) fail("refresh_margin must be positive");
  if (!(lr0 > 0.0) || !(lr_decay > 0.0)) fail("learning rate settings must be positive");
  if (!(model.dg_train > 0.0)) fail("dg_train must be positive");
}

std::string trainer_config_to_json(const TrainerConfig& cfg) {
  json j = {{"model", json::parse(model_config_to_json(cfg.model))},
            {"batch_instances", cfg.batch_instances},
            {"n_min", cfg.n_min},
            {"n_max", cfg.n_max},
            {"m_min", cfg.m_min},
            {"m_max", cfg.m_max},
            {"refine_from_step", cfg.refine_from_step},
            {"n_max_refine", cfg.n_max_refine},
            {"lr0", cfg.lr0},
            {"lr_decay", cfg.lr_decay},
            {"lr_decay_every", cfg.lr_decay_every},
            {"grad_clip", cfg.grad_clip},
            {"validation_size", cfg.validation_size},
            {"refresh_margin", cfg.refresh_margin},
            {"refresh_every", cfg.refresh_every},
            {"steps", cfg.steps},
            {"checkpoint_every", cfg.checkpoint_every},
            {"workers", cfg.workers},
            {"seed", cfg.seed}};
  return j.dump(2);
}

TrainerConfig trainer_config_from_json(const std::string& text) {
  TrainerConfig cfg;
  try {
    const json j = json::parse(text);
    if (j.value("profile", std::string{}) == "desk") cfg = TrainerConfig::desk();
    if (j.contains("model")) cfg.model = model_config_from_json(j["model"].dump());
    cfg.batch_instances = j.value("batch_instances", cfg.batch_instances);
    cfg.n_min = j.value("n_min", cfg.n_min);
    cfg.n_max = j.value("n_max", cfg.n_max);
    cfg.m_min = j.value("m_min", cfg.m_min);
    cfg.m_max = j.value("m_max", cfg.m_max);
    cfg.refine_from_step = j.value("refine_from_step", cfg.refine_from_step);
    cfg.n_max_refine = j.value("n_max_refine", cfg.n_max_refine);
    cfg.lr0 = j.value("lr0", cfg.lr0);
    cfg.lr_decay = j.value("lr_decay", cfg.lr_decay);
    cfg.lr_decay_every = j.value("lr_decay_every", cfg.lr_decay_every);
    cfg.grad_clip = j.value("grad_clip", cfg.grad_clip);
    cfg.validation_size = j.value("validation_size", cfg.validation_size);
    cfg.refresh_margin = j.value("refresh_margin", cfg.refresh_margin);
    cfg.refresh_every = j.value("refresh_every", cfg.refresh_every);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("trainer config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

TrainingState init_training(const TrainerConfig& cfg) {
  cfg.validate();
  TrainingState state{cfg, DanParameters::create(cfg.model, derive_seed(cfg.seed, {0})), {}, Rng(cfg.seed), 0};
  state.baseline = state.train;
  return state;
}

Episode collect_episode(const MtspInstance& inst, const DanParameters& params, double dg, double clip_c, Rng& rng) {
  return run_episode(inst, sampling_policy(params, clip_c, rng), dg, true);
}

double baseline_rollout(const MtspInstance& inst, const DanParameters& baseline, double dg, double clip_c) {
  return -run_episode(inst, greedy_policy(baseline, clip_c), dg, false).solution.minmax;
}

double compute_gradient(std::span<const Trajectory> batch, std::span<const double> baselines, DanParameters& params,
                        double clip_c, int workers) {
  if (batch.size() != baselines.size()) throw InvalidArgument("compute_gradient: one baseline per trajectory");
  if (batch.empty()) return 0.0;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  std::vector<std::vector<Tensor>> per_episode(batch.size());
  std::vector<double> losses(batch.size(), 0.0);
  const DanParameters& frozen = params;
  parallel_for(batch.size(), workers, [&](std::size_t e) {
    const double advantage = batch[e].reward - baselines[e];
    if (advantage == 0.0) return;
    auto& grads = per_episode[e];
    grads = frozen.store.make_grad_buffers();
    double total_log_prob = 0.0;
    for (const auto& rec : batch[e].records) {
      if (rec.obs.cities_rel.empty()) throw InvalidArgument("compute_gradient: trajectory lacks observations");
      // A single legal action has log p = 0 and no gradient.
      if (std::count(rec.obs.mask.begin(), rec.obs.mask.end(), 0) == 1) continue;
      total_log_prob += log_prob(rec.obs, rec.city, frozen, clip_c, &grads, -advantage * inv_batch);
    }
    losses[e] = -advantage * total_log_prob * inv_batch;
  });
  double loss = 0.0;
  for (std::size_t e = 0; e < batch.size(); ++e) {
    loss += losses[e];
    if (per_episode[e].empty()) continue;
    for (std::size_t p = 0; p < params.store.size(); ++p) {
      auto& dst = params.store[p].grad.values();
      const auto& src = per_episode[e][p].values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
  for (const auto& entry : params.store) {
    if (!entry.grad.all_finite()) throw TrainingDivergence("non-finite gradient in parameter " + entry.name);
  }
  return loss;
}

namespace {

struct SampledInstance {
  MtspInstance inst;
  std::uint64_t episode_seed = 0;
};

SampledInstance sample_instance(const TrainerConfig& cfg, long step, std::uint64_t base, std::uint64_t index) {
  Rng pick(derive_seed(base, {index, 0}));
  const int n_max = (cfg.refine_from_step >= 0 && step >= cfg.refine_from_step) ? cfg.n_max_refine : cfg.n_max;
  const int n = uniform_int(pick, cfg.n_min, n_max);
  const int m = uniform_int(pick, cfg.m_min, cfg.m_max);
  return {generate_instance(n, m, derive_seed(base, {index, 1})), derive_seed(base, {index, 2})};
}

}  // namespace

TrainMetrics train_step(TrainingState& state) {
  const auto start = std::chrono::steady_clock::now();
  const TrainerConfig& cfg = state.config;
  const std::uint64_t step_seed = state.rng();
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_instances);
  const double clip = cfg.model.clip_c_train;
  const double dg = cfg.model.dg_train;

  std::vector<Trajectory> trajectories(batch);
  std::vector<double> baselines(batch);
  parallel_for(batch, cfg.workers, [&](std::size_t b) {
    const SampledInstance s = sample_instance(cfg, state.step, step_seed, b);
    Rng episode_rng(s.episode_seed);
    trajectories[b] = collect_episode(s.inst, state.train, dg, clip, episode_rng).trajectory;
    baselines[b] = baseline_rollout(s.inst, state.baseline, dg, clip);
  });

  TrainMetrics metrics;
  state.train.store.zero_grad();
  compute_gradient(trajectories, baselines, state.train, clip, cfg.workers);
  metrics.grad_norm = clip_grad_norm(state.train.store, cfg.grad_clip);
  metrics.lr = adam_step(state.train.store, cfg.lr0, cfg.lr_decay, cfg.lr_decay_every);
  ++state.step;

  for (std::size_t b = 0; b < batch; ++b) {
    metrics.rewards.push_back(trajectories[b].reward);
    metrics.baselines.push_back(baselines[b]);
    metrics.mean_reward += trajectories[b].reward / static_cast<double>(batch);
    metrics.mean_advantage += (trajectories[b].reward - baselines[b]) / static_cast<double>(batch);
  }
  if (cfg.refresh_every > 0 && state.step % cfg.refresh_every == 0) {
    metrics.baseline_refreshed = refresh_baseline(state).refreshed;
  }
  metrics.step = state.step;
  metrics.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return metrics;
}

double mean_greedy_cost(std::span<const MtspInstance> instances, const DanParameters& params, double dg,
                        int workers) {
  std::vector<double> costs(instances.size());
  parallel_for(instances.size(), workers, [&](std::size_t i) {
    costs[i] = -baseline_rollout(instances[i], params, dg, params.config.clip_c_train);
  });
  return std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(std::max<std::size_t>(1, costs.size()));
}

RefreshResult refresh_baseline(TrainingState& state) {
  const TrainerConfig& cfg = state.config;
  const std::uint64_t val_seed = state.rng();
  std::vector<MtspInstance> validation;
  for (int v = 0; v < cfg.validation_size; ++v) {
    validation.push_back(sample_instance(cfg, state.step, val_seed, static_cast<std::uint64_t>(v)).inst);
  }
  RefreshResult r;
  r.train_mean = mean_greedy_cost(validation, state.train, cfg.model.dg_train, cfg.workers);
  r.baseline_mean = mean_greedy_cost(validation, state.baseline, cfg.model.dg_train, cfg.workers);
  if (r.train_mean < r.baseline_mean * (1.0 - cfg.refresh_margin)) {
    state.baseline.store.copy_values_from(state.train.store);
    r.refreshed = true;
  }
  return r;
}

std::string metrics_to_json_line(const TrainMetrics& m) {
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "{\"step\":%ld,\"mean_reward\":%.17g,\"mean_advantage\":%.17g,\"grad_norm\":%.17g,\"lr\":%.17g,"
                "\"baseline_refreshed\":%s,\"wall_ms\":%.3f}",
                m.step, m.mean_reward, m.mean_advantage, m.grad_norm, m.lr, m.baseline_refreshed ? "true" : "false",
                m.wall_ms);
  return buf;
}

void save_checkpoint(const TrainingState& state, const std::string& path) {
  std::ostringstream rng_state;
  rng_state << state.rng;
  json meta = {{"kind", "training"},
               {"trainer_config", json::parse(trainer_config_to_json(state.config))},
               {"model_config", json::parse(model_config_to_json(state.config.model))},
               {"step", state.step},
               {"rng", rng_state.str()}};
  write_checkpoint(path, meta.dump(),
                   {{"train", &state.train.store, true}, {"baseline", &state.baseline.store, false}});
}

TrainingState load_checkpoint(const std::string& path) {
  const CheckpointData data = read_checkpoint(path);
  json meta;
  try {
    meta = json::parse(data.meta);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint metadata: ") + e.what());
  }
  if (meta.value("kind", std::string{}) != "training") throw CheckpointError(path + " is not a training checkpoint");
  const TrainerConfig cfg = trainer_config_from_json(meta.at("trainer_config").dump());
  TrainingState state = init_training(cfg);
  assign_store(data.store("train"), state.train.store, true);
  assign_store(data.store("baseline"), state.baseline.store, false);
  state.step = meta.at("step").get<long>();
  std::istringstream rng_state(meta.at("rng").get<std::string>());
  rng_state >> state.rng;
  if (!rng_state) throw CheckpointError("checkpoint rng state is malformed");
  return state;
}

namespace {

DanParameters load_model_impl(const std::string& path, const ModelConfig* expected) {
  const CheckpointData data = read_checkpoint(path);
  ModelConfig cfg;
  try {
    cfg = model_config_from_json(json::parse(data.meta).at("model_config").dump());
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint metadata: ") + e.what());
  }
  DanParameters params = DanParameters::create(expected ? *expected : cfg, 0);
  assign_store(data.store("baseline"), params.store, false);
  return params;
}

}  // namespace

DanParameters load_model(const std::string& path) { return load_model_impl(path, nullptr); }

DanParameters load_model(const std::string& path, const ModelConfig& expected) {
  return load_model_impl(path, &expected);
}

void save_model(const DanParameters& params, const std::string& path) {
  json meta = {{"kind", "model"}, {"model_config", json::parse(model_config_to_json(params.config))}};
  write_checkpoint(path, meta.dump(), {{"baseline", &params.store, false}});
}

}  // namespace dan
