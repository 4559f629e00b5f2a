#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dan/attention.hpp"
#include "dan/env.hpp"
#include "dan/instance.hpp"
#include "dan/random.hpp"

namespace dan {

struct ModelConfig {
  int d = 128;
  int ff_hidden = 0;  // 0 means 4 * d
  int heads = 1;
  double clip_c_train = 10.0;
  double clip_c_eval = 10.0;
  double dg_train = kTrainDg;
  double dg_eval = kEvalDg;

  int hidden() const { return ff_hidden > 0 ? ff_hidden : 4 * d; }
  bool operator==(const ModelConfig&) const = default;
};

std::string model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const std::string& text);

// Every learnable tensor of the network, stored in one ParameterStore in a
// fixed creation order; the index fields locate them.
class DanParameters {
 public:
  struct Linear {
    int w = -1;
    int b = -1;
  };
  struct Pointer {
    int wq = -1;
    int wk = -1;
  };

  static DanParameters create(const ModelConfig& cfg, std::uint64_t seed);

  ModelConfig config;
  ParameterStore store;

  Linear city_embed;   // 2 -> d, cities 1..n-1
  Linear depot_embed;  // 2 -> d, depot only
  Linear agent_embed;  // 3 -> d
  AttentionBlockParams city_enc;
  AttentionBlockParams agent_enc;
  AttentionBlockParams city_agent_enc;
  AttentionBlockParams dec1;
  AttentionBlockParams dec2;
  Pointer dec3;  // attention weights only, no values or feed-forward
};

struct PolicyOutput {
  std::vector<double> probs;
  // Pre-softmax similarity after optional clipping; masked entries are
  // meaningless and flagged in `masked`.
  std::vector<double> logits;
  std::vector<std::uint8_t> masked;
  int observer = 0;
};

// Graph-level building blocks, used for both inference and training.
Var encode_cities(Graph& g, const ParamBinding& bind, const DanParameters& p, const Observation& obs);
Var encode_agents(Graph& g, const ParamBinding& bind, const DanParameters& p, const Observation& obs);
Var encode_city_agent(Graph& g, const ParamBinding& bind, const DanParameters& p, Var city_emb, Var agent_emb);

struct DecoderOut {
  Var logits;     // 1 x n, after clipping, before masking
  Var log_probs;  // 1 x n, -inf on masked entries
};
DecoderOut decode_policy(Graph& g, const ParamBinding& bind, const DanParameters& p, Var city_emb, Var agent_emb,
                         Var city_agent_emb, ColumnMask mask, double clip_c);

// Tensor-level wrappers.
Tensor encode_cities(const Observation& obs, const DanParameters& p);
Tensor encode_agents(const Observation& obs, const DanParameters& p);
Tensor encode_city_agent(const Tensor& city_emb, const Tensor& agent_emb, const DanParameters& p);
PolicyOutput decode_policy(const Tensor& city_emb, const Tensor& agent_emb, const Tensor& city_agent_emb,
                           ColumnMask mask, const DanParameters& p, double clip_c);

// clip_c <= 0 disables logit clipping.
PolicyOutput forward(const Observation& obs, const DanParameters& p, double clip_c);

// log p(city | obs). When `grads` is given, also accumulates
// grad_scale * d log p / d parameters into it.
double log_prob(const Observation& obs, int city, const DanParameters& p, double clip_c,
                std::vector<Tensor>* grads = nullptr, double grad_scale = 1.0);

// Argmax, ties to the lowest index.
int select_greedy(const PolicyOutput& po);
// Categorical draw; never returns a zero-probability city.
int select_sample(const PolicyOutput& po, Rng& rng);

Policy greedy_policy(const DanParameters& p, double clip_c);
// `rng` must outlive the returned policy.
Policy sampling_policy(const DanParameters& p, double clip_c, Rng& rng);

struct SolveMode {
  enum class Kind { kGreedy, kSample } kind = Kind::kGreedy;
  int samples = 1;

  static SolveMode greedy() { return {}; }
  static SolveMode sample(int k) { return {Kind::kSample, k}; }
};

struct SolveResult {
  Solution solution;
  std::vector<double> sample_costs;  // one per rollout
  int best_index = 0;
};

// Greedy: one episode. Sample(K): K episodes with streams derived from
// `seed`, best by (cost, rollout index). `workers` > 1 runs rollouts on
// threads; the result does not depend on it.
SolveResult solve(const MtspInstance& inst, const DanParameters& p, SolveMode mode, double dg, std::uint64_t seed,
                  double clip_c, int workers = 1);

}  // namespace dan
