#include "dan/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "dan/errors.hpp"
#include "dan/parallel.hpp"

namespace dan {

std::string model_config_to_json(const ModelConfig& cfg) {
  nlohmann::json j = {{"d", cfg.d},
                      {"ff_hidden", cfg.ff_hidden},
                      {"heads", cfg.heads},
                      {"clip_c_train", cfg.clip_c_train},
                      {"clip_c_eval", cfg.clip_c_eval},
                      {"dg_train", cfg.dg_train},
                      {"dg_eval", cfg.dg_eval}};
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  ModelConfig cfg;
  try {
    const auto j = nlohmann::json::parse(text);
    cfg.d = j.value("d", cfg.d);
    cfg.ff_hidden = j.value("ff_hidden", cfg.ff_hidden);
    cfg.heads = j.value("heads", cfg.heads);
    cfg.clip_c_train = j.value("clip_c_train", cfg.clip_c_train);
    cfg.clip_c_eval = j.value("clip_c_eval", cfg.clip_c_eval);
    cfg.dg_train = j.value("dg_train", cfg.dg_train);
    cfg.dg_eval = j.value("dg_eval", cfg.dg_eval);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("model config: ") + e.what());
  }
  if (cfg.d < 1 || cfg.heads < 1 || cfg.d % cfg.heads != 0) {
    throw InvalidArgument("model config: d must be positive and divisible by heads");
  }
  if (!(cfg.dg_train > 0.0) || !(cfg.dg_eval > 0.0)) throw InvalidArgument("model config: dg must be positive");
  return cfg;
}

DanParameters DanParameters::create(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.d < 1 || cfg.heads < 1 || cfg.d % cfg.heads != 0) {
    throw InvalidArgument("DanParameters: d must be positive and divisible by heads");
  }
  DanParameters p;
  p.config = cfg;
  Rng rng(seed);
  const int d = cfg.d;
  const int h = cfg.hidden();
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  auto linear = [&](const std::string& name, int in) {
    Linear l;
    l.w = p.store.add_uniform(name + ".w", in, d, bound, rng);
    l.b = p.store.add_uniform(name + ".b", 1, d, bound, rng);
    return l;
  };
  p.city_embed = linear("city_embed", 2);
  p.depot_embed = linear("depot_embed", 2);
  p.agent_embed = linear("agent_embed", 3);
  p.city_enc = add_attention_block(p.store, "city_enc", d, h, rng);
  p.agent_enc = add_attention_block(p.store, "agent_enc", d, h, rng);
  p.city_agent_enc = add_attention_block(p.store, "city_agent_enc", d, h, rng);
  p.dec1 = add_attention_block(p.store, "dec1", d, h, rng);
  p.dec2 = add_attention_block(p.store, "dec2", d, h, rng);
  p.dec3.wq = p.store.add_uniform("dec3.wq", d, d, bound, rng);
  p.dec3.wk = p.store.add_uniform("dec3.wk", d, d, bound, rng);
  return p;
}

Var encode_cities(Graph& g, const ParamBinding& bind, const DanParameters& p, const Observation& obs) {
  const int n = obs.n();
  if (n < 2) throw ShapeError("encode_cities: need a depot and at least one city");
  Tensor depot(1, 2);
  depot[0] = obs.cities_rel[0].x;
  depot[1] = obs.cities_rel[0].y;
  Tensor cities(n - 1, 2);
  for (int i = 1; i < n; ++i) {
    cities(i - 1, 0) = obs.cities_rel[i].x;
    cities(i - 1, 1) = obs.cities_rel[i].y;
  }
  const Var depot_h =
      linear(g, g.constant(std::move(depot)), bind.get(g, p.depot_embed.w), bind.get(g, p.depot_embed.b));
  const Var city_h =
      linear(g, g.constant(std::move(cities)), bind.get(g, p.city_embed.w), bind.get(g, p.city_embed.b));
  const Var rows[] = {depot_h, city_h};
  const Var h = concat_rows(g, rows);
  return attention_block(g, h, h, p.city_enc, bind, {}, p.config.heads);
}

Var encode_agents(Graph& g, const ParamBinding& bind, const DanParameters& p, const Observation& obs) {
  const int m = obs.m();
  if (m < 1) throw ShapeError("encode_agents: no agents");
  Tensor agents(m, 3);
  for (int j = 0; j < m; ++j) {
    agents(j, 0) = obs.agents_rel[j].x;
    agents(j, 1) = obs.agents_rel[j].y;
    agents(j, 2) = obs.agents_rel[j].g;
  }
  const Var h =
      linear(g, g.constant(std::move(agents)), bind.get(g, p.agent_embed.w), bind.get(g, p.agent_embed.b));
  return attention_block(g, h, h, p.agent_enc, bind, {}, p.config.heads);
}

Var encode_city_agent(Graph& g, const ParamBinding& bind, const DanParameters& p, Var city_emb, Var agent_emb) {
  return attention_block(g, city_emb, agent_emb, p.city_agent_enc, bind, {}, p.config.heads);
}

DecoderOut decode_policy(Graph& g, const ParamBinding& bind, const DanParameters& p, Var city_emb, Var agent_emb,
                         Var city_agent_emb, ColumnMask mask, double clip_c) {
  const Var state = mean_rows(g, city_emb);
  const Var state_emb = attention_block(g, state, agent_emb, p.dec1, bind, {}, p.config.heads);
  const Var candidate = attention_block(g, state_emb, city_agent_emb, p.dec2, bind, mask, p.config.heads);
  const Var q = matmul(g, candidate, bind.get(g, p.dec3.wq));
  const Var k = matmul(g, city_agent_emb, bind.get(g, p.dec3.wk));
  Var logits = scaled_dot_similarity(g, q, k);
  if (clip_c > 0.0) logits = tanh_clip(g, logits, clip_c);
  return {logits, masked_log_softmax(g, logits, mask)};
}

namespace {

PolicyOutput to_policy_output(const Graph& g, const DecoderOut& out, ColumnMask mask, int observer) {
  const Tensor& logits = g.value(out.logits);
  const Tensor& logp = g.value(out.log_probs);
  PolicyOutput po;
  po.observer = observer;
  po.logits = logits.values();
  po.masked.assign(logits.cols(), 0);
  if (!mask.empty()) po.masked.assign(mask.begin(), mask.end());
  po.probs.resize(logits.cols());
  for (int i = 0; i < logits.cols(); ++i) po.probs[i] = po.masked[i] ? 0.0 : std::exp(logp[i]);
  return po;
}

void check_observation(const Observation& obs) {
  if (static_cast<int>(obs.mask.size()) != obs.n()) {
    throw ShapeError("observation mask has " + std::to_string(obs.mask.size()) + " entries for " +
                     std::to_string(obs.n()) + " cities");
  }
}

}  // namespace

Tensor encode_cities(const Observation& obs, const DanParameters& p) {
  Graph g(false);
  const ParamBinding bind{&p.store, nullptr};
  return g.value(encode_cities(g, bind, p, obs));
}

Tensor encode_agents(const Observation& obs, const DanParameters& p) {
  Graph g(false);
  const ParamBinding bind{&p.store, nullptr};
  return g.value(encode_agents(g, bind, p, obs));
}

Tensor encode_city_agent(const Tensor& city_emb, const Tensor& agent_emb, const DanParameters& p) {
  Graph g(false);
  const ParamBinding bind{&p.store, nullptr};
  return g.value(encode_city_agent(g, bind, p, g.constant(city_emb), g.constant(agent_emb)));
}

PolicyOutput decode_policy(const Tensor& city_emb, const Tensor& agent_emb, const Tensor& city_agent_emb,
                           ColumnMask mask, const DanParameters& p, double clip_c) {
  Graph g(false);
  const ParamBinding bind{&p.store, nullptr};
  const auto out = decode_policy(g, bind, p, g.constant(city_emb), g.constant(agent_emb), g.constant(city_agent_emb),
                                 mask, clip_c);
  return to_policy_output(g, out, mask, 0);
}

PolicyOutput forward(const Observation& obs, const DanParameters& p, double clip_c) {
  check_observation(obs);
  Graph g(false);
  const ParamBinding bind{&p.store, nullptr};
  const Var hc = encode_cities(g, bind, p, obs);
  const Var ha = encode_agents(g, bind, p, obs);
  const Var hca = encode_city_agent(g, bind, p, hc, ha);
  const auto out = decode_policy(g, bind, p, hc, ha, hca, obs.mask, clip_c);
  return to_policy_output(g, out, obs.mask, obs.observer);
}

double log_prob(const Observation& obs, int city, const DanParameters& p, double clip_c, std::vector<Tensor>* grads,
                double grad_scale) {
  check_observation(obs);
  if (city < 0 || city >= obs.n() || obs.mask[city]) {
    throw InvalidArgument("log_prob: city " + std::to_string(city) + " is not a legal action");
  }
  Graph g(grads != nullptr);
  const ParamBinding bind{&p.store, grads};
  const Var hc = encode_cities(g, bind, p, obs);
  const Var ha = encode_agents(g, bind, p, obs);
  const Var hca = encode_city_agent(g, bind, p, hc, ha);
  const auto out = decode_policy(g, bind, p, hc, ha, hca, obs.mask, clip_c);
  const Var chosen = pick(g, out.log_probs, 0, city);
  if (grads) g.backward(chosen, grad_scale);
  return g.value(chosen)[0];
}

int select_greedy(const PolicyOutput& po) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(po.probs.size()); ++i) {
    if (po.probs[i] <= 0.0) continue;
    if (best < 0 || po.probs[i] > po.probs[best]) best = i;
  }
  if (best < 0) throw EmptySupport("select_greedy: no city has positive probability");
  return best;
}

int select_sample(const PolicyOutput& po, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  int last = -1;
  for (int i = 0; i < static_cast<int>(po.probs.size()); ++i) {
    if (po.probs[i] <= 0.0) continue;
    cumulative += po.probs[i];
    last = i;
    if (u < cumulative) return i;
  }
  if (last < 0) throw EmptySupport("select_sample: no city has positive probability");
  // u landed in the rounding gap above the final cumulative sum.
  return last;
}

Policy greedy_policy(const DanParameters& p, double clip_c) {
  return [&p, clip_c](const Observation& obs) {
    const PolicyOutput po = forward(obs, p, clip_c);
    const int c = select_greedy(po);
    return Decision{c, std::log(po.probs[c])};
  };
}

Policy sampling_policy(const DanParameters& p, double clip_c, Rng& rng) {
  return [&p, clip_c, &rng](const Observation& obs) {
    const PolicyOutput po = forward(obs, p, clip_c);
    const int c = select_sample(po, rng);
    return Decision{c, std::log(po.probs[c])};
  };
}

SolveResult solve(const MtspInstance& inst, const DanParameters& p, SolveMode mode, double dg, std::uint64_t seed,
                  double clip_c, int workers) {
  SolveResult result;
  if (mode.kind == SolveMode::Kind::kGreedy) {
    result.solution = run_episode(inst, greedy_policy(p, clip_c), dg, false).solution;
    result.sample_costs = {result.solution.minmax};
    return result;
  }
  if (mode.samples < 1) throw InvalidArgument("solve: sampling needs at least one sample");
  std::vector<Solution> solutions(mode.samples);
  parallel_for(solutions.size(), workers, [&](std::size_t k) {
    Rng rng(derive_seed(seed, {k}));
    solutions[k] = run_episode(inst, sampling_policy(p, clip_c, rng), dg, false).solution;
  });
  result.sample_costs.reserve(solutions.size());
  for (std::size_t k = 0; k < solutions.size(); ++k) {
    result.sample_costs.push_back(solutions[k].minmax);
    if (solutions[k].minmax < solutions[result.best_index].minmax) result.best_index = static_cast<int>(k);
  }
  result.solution = std::move(solutions[result.best_index]);
  return result;
}

}  // namespace dan
