#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dan/env.hpp"
#include "dan/errors.hpp"
#include "dan/model.hpp"
#include "dan/optim.hpp"

using namespace dan;

namespace {

ModelConfig small(int d = 16) {
  ModelConfig cfg;
  cfg.d = d;
  return cfg;
}

// A mid-episode observation: a few random moves, then the next decider.
Observation random_observation(const MtspInstance& inst, std::uint64_t seed, int moves) {
  EnvState s = reset(inst, 0.05);
  Rng rng(seed);
  int done = 0;
  while (true) {
    for (int a : advance_time(s)) {
      Observation o = observe(s, a);
      if (done == moves) return o;
      std::vector<int> legal;
      for (int i = 1; i < o.n(); ++i)
        if (!o.mask[i]) legal.push_back(i);
      if (legal.empty()) return o;
      step_select(s, a, legal[uniform_int(rng, 0, static_cast<int>(legal.size()) - 1)]);
      ++done;
    }
  }
}

}  // namespace

TEST_CASE("model config JSON round trip") {
  ModelConfig cfg;
  cfg.d = 24;
  cfg.heads = 2;
  cfg.clip_c_eval = 100.0;
  CHECK(model_config_from_json(model_config_to_json(cfg)) == cfg);
  CHECK_THROWS(model_config_from_json("{\"d\": \"wide\"}"));
}

TEST_CASE("parameter layout") {
  const auto p = DanParameters::create(small(8), 1);
  CHECK(p.store.contains("city_embed.w"));
  CHECK(p.store.contains("depot_embed.w"));
  CHECK(p.store[p.agent_embed.w].value.rows() == 3);
  CHECK(p.store[p.dec3.wq].value.rows() == 8);
  CHECK(p.store[p.city_enc.ff1].value.cols() == 32);
  const auto q = DanParameters::create(small(8), 1);
  for (std::size_t i = 0; i < p.store.size(); ++i) CHECK(p.store[i].value.values() == q.store[i].value.values());
}

TEST_CASE("encoders") {
  const auto p = DanParameters::create(small(), 2);

  SUBCASE("n = 2 gives a finite 2 x d tensor") {
    const auto inst = generate_instance(2, 1, 1);
    const auto obs = observe([&] {
      auto s = reset(inst, 0.1);
      advance_time(s);
      return s;
    }(), 0);
    const Tensor h = encode_cities(obs, p);
    CHECK(h.rows() == 2);
    CHECK(h.cols() == 16);
    CHECK(h.all_finite());
  }

  SUBCASE("depot and a coincident city embed differently") {
    Observation obs;
    obs.cities_rel = {{0.2, 0.3}, {0.2, 0.3}, {0.5, 0.1}};
    obs.agents_rel = {{0, 0, 0}};
    obs.mask = {0, 0, 0};
    const Tensor h = encode_cities(obs, p);
    bool differ = false;
    for (int c = 0; c < h.cols(); ++c) differ = differ || h(0, c) != h(1, c);
    CHECK(differ);
  }

  SUBCASE("city and agent permutations permute rows") {
    const auto inst = generate_instance(9, 4, 3);
    const auto obs = random_observation(inst, 3, 4);
    const std::vector<int> cperm{0, 5, 3, 8, 1, 2, 7, 4, 6};
    const std::vector<int> aperm{2, 0, 3, 1};
    Observation po = obs;
    for (int i = 0; i < obs.n(); ++i) po.cities_rel[i] = obs.cities_rel[cperm[i]];
    for (int j = 0; j < obs.m(); ++j) po.agents_rel[j] = obs.agents_rel[aperm[j]];
    const Tensor hc = encode_cities(obs, p), hcp = encode_cities(po, p);
    const Tensor ha = encode_agents(obs, p), hap = encode_agents(po, p);
    for (int i = 0; i < obs.n(); ++i)
      for (int c = 0; c < 16; ++c) CHECK(hcp(i, c) == doctest::Approx(hc(cperm[i], c)).epsilon(1e-10));
    for (int j = 0; j < obs.m(); ++j)
      for (int c = 0; c < 16; ++c) CHECK(hap(j, c) == doctest::Approx(ha(aperm[j], c)).epsilon(1e-10));

    const Tensor hca = encode_city_agent(hc, ha, p), hcap = encode_city_agent(hcp, hap, p);
    for (int i = 0; i < obs.n(); ++i)
      for (int c = 0; c < 16; ++c) CHECK(hcap(i, c) == doctest::Approx(hca(cperm[i], c)).epsilon(1e-10));
  }

  SUBCASE("identical agent triples give identical rows") {
    Observation obs;
    obs.cities_rel = {{0, 0}, {0.1, 0.2}};
    obs.agents_rel = {{0, 0, 0}, {0.3, 0.1, 0.2}, {0.3, 0.1, 0.2}};
    obs.mask = {0, 0};
    const Tensor ha = encode_agents(obs, p);
    for (int c = 0; c < 16; ++c) CHECK(ha(1, c) == ha(2, c));
  }

  SUBCASE("m = 1: every city-agent row uses the single agent value") {
    const auto inst = generate_instance(6, 1, 4);
    const auto obs = random_observation(inst, 4, 2);
    const Tensor hca = encode_city_agent(encode_cities(obs, p), encode_agents(obs, p), p);
    CHECK(hca.rows() == 6);
    CHECK(hca.all_finite());
  }
}

TEST_CASE("policy output invariants on random observations") {
  const auto p = DanParameters::create(small(), 5);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng pick(seed);
    const auto inst = generate_instance(uniform_int(pick, 2, 14), uniform_int(pick, 1, 4), seed);
    const auto obs = random_observation(inst, seed, uniform_int(pick, 0, inst.n() - 1));
    const auto po = forward(obs, p, 10.0);
    double s = 0.0;
    for (int i = 0; i < obs.n(); ++i) {
      if (obs.mask[i]) CHECK(po.probs[i] == 0.0);
      CHECK(po.masked[i] == obs.mask[i]);
      s += po.probs[i];
    }
    CHECK(std::abs(s - 1.0) < 1e-6);
    CHECK_FALSE(obs.mask[select_greedy(po)]);
  }
}

TEST_CASE("only the depot left gives a one-hot policy") {
  const auto p = DanParameters::create(small(), 6);
  Observation obs;
  obs.cities_rel = {{-0.2, 0.1}, {0, 0}, {0.3, 0.3}};
  obs.agents_rel = {{0, 0, 0}, {0.1, 0.1, 0.4}};
  obs.mask = {0, 1, 1};
  const auto po = forward(obs, p, 10.0);
  CHECK(po.probs[0] == 1.0);
  CHECK(po.probs[1] == 0.0);
  CHECK(po.probs[2] == 0.0);
  obs.mask = {1, 1, 1};
  CHECK_THROWS_AS(forward(obs, p, 10.0), EmptySupport);
}

TEST_CASE("logit clipping bounds the similarities") {
  // inflate dec3 so raw similarities are large
  auto p = DanParameters::create(small(), 7);
  for (auto& v : p.store[p.dec3.wq].value.values()) v *= 400.0;
  const auto inst = generate_instance(12, 3, 7);
  const auto obs = random_observation(inst, 7, 3);
  const auto clipped = forward(obs, p, 100.0);
  const auto raw = forward(obs, p, 0.0);
  double raw_max = 0.0;
  for (int i = 0; i < obs.n(); ++i) {
    if (obs.mask[i]) continue;
    CHECK(std::abs(clipped.logits[i]) <= 100.0);
    CHECK(clipped.logits[i] == doctest::Approx(100.0 * std::tanh(raw.logits[i])).epsilon(1e-12));
    raw_max = std::max(raw_max, std::abs(raw.logits[i]));
  }
  CHECK(raw_max > 100.0);
}

TEST_CASE("forward: translation invariance and equivariance") {
  const auto p = DanParameters::create(small(), 8);
  const auto inst = generate_instance(10, 3, 8);
  auto shifted = inst;
  for (auto& c : shifted.coords) c = {c.x + 0.3, c.y - 0.2};
  const auto a = forward(random_observation(inst, 1, 4), p, 10.0);
  const auto b = forward(random_observation(shifted, 1, 4), p, 10.0);
  for (std::size_t i = 0; i < a.probs.size(); ++i) CHECK(a.probs[i] == doctest::Approx(b.probs[i]).epsilon(1e-9));

  // relabel non-depot cities, and separately the non-observing agents
  const auto obs = random_observation(inst, 2, 3);
  const auto base = forward(obs, p, 10.0);
  std::vector<int> perm(obs.n());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(3);
  std::shuffle(perm.begin() + 1, perm.end(), rng);
  Observation po = obs;
  for (int i = 0; i < obs.n(); ++i) {
    po.cities_rel[i] = obs.cities_rel[perm[i]];
    po.mask[i] = obs.mask[perm[i]];
  }
  const auto permuted = forward(po, p, 10.0);
  for (int i = 0; i < obs.n(); ++i) CHECK(permuted.probs[i] == doctest::Approx(base.probs[perm[i]]).epsilon(1e-8));

  Observation ao = obs;
  std::reverse(ao.agents_rel.begin(), ao.agents_rel.end());
  ao.observer = obs.m() - 1 - obs.observer;
  const auto relabeled = forward(ao, p, 10.0);
  for (int i = 0; i < obs.n(); ++i) CHECK(relabeled.probs[i] == doctest::Approx(base.probs[i]).epsilon(1e-8));
}

TEST_CASE("select_greedy") {
  PolicyOutput po;
  po.probs = {0.2, 0.5, 0.3};
  po.logits = {0.1, 0.9, 0.4};
  CHECK(select_greedy(po) == 1);
  po.probs = {0.5, 0.5};
  CHECK(select_greedy(po) == 0);

  // invariant under a strictly monotone transform of the logits
  const auto p = DanParameters::create(small(), 9);
  const auto obs = random_observation(generate_instance(12, 2, 9), 9, 3);
  auto out = forward(obs, p, 10.0);
  const int before = select_greedy(out);
  double mx = -1e300;
  for (int i = 0; i < obs.n(); ++i)
    if (!obs.mask[i]) mx = std::max(mx, out.logits[i]);
  double z = 0.0;
  std::vector<double> q(obs.n(), 0.0);
  for (int i = 0; i < obs.n(); ++i)
    if (!obs.mask[i]) z += q[i] = std::exp(3.0 * (out.logits[i] - mx));
  for (auto& v : q) v /= z;
  out.probs = q;
  CHECK(select_greedy(out) == before);
}

TEST_CASE("select_sample") {
  PolicyOutput onehot;
  onehot.probs = {0.0, 1.0, 0.0};
  Rng rng(10);
  for (int i = 0; i < 100; ++i) CHECK(select_sample(onehot, rng) == 1);

  PolicyOutput po;
  po.probs = {0.1, 0.0, 0.45, 0.3, 0.15};
  const int draws = 100000;
  std::vector<int> counts(5, 0);
  for (int i = 0; i < draws; ++i) ++counts[select_sample(po, rng)];
  CHECK(counts[1] == 0);
  for (int i = 0; i < 5; ++i) {
    const double sd = std::sqrt(draws * po.probs[i] * (1.0 - po.probs[i]));
    CHECK(std::abs(counts[i] - draws * po.probs[i]) <= 3.0 * sd + 1e-9);
  }

  Rng r1(11), r2(11);
  for (int i = 0; i < 50; ++i) CHECK(select_sample(po, r1) == select_sample(po, r2));
}

TEST_CASE("log_prob matches forward and its gradient matches finite differences") {
  auto p = DanParameters::create(small(8), 12);
  const auto obs = random_observation(generate_instance(6, 2, 12), 12, 2);
  const auto po = forward(obs, p, 10.0);
  int city = 0;
  for (int i = obs.n() - 1; i >= 0; --i)
    if (!obs.mask[i]) {
      city = i;
      break;
    }
  CHECK(log_prob(obs, city, p, 10.0) == doctest::Approx(std::log(po.probs[city])).epsilon(1e-10));

  LossFn f = [&](const ParameterStore& s, std::vector<Tensor>* grads) {
    DanParameters q = p;
    q.store.copy_values_from(s);
    return log_prob(obs, city, q, 10.0, grads);
  };
  CHECK(finite_diff_check(f, p.store, 1e-5, 250, 3).max_rel_error < 1e-3);
}

TEST_CASE("solve") {
  const auto p = DanParameters::create(small(), 13);

  SUBCASE("forced episode") {
    MtspInstance inst;
    inst.m = 1;
    inst.coords = {{0.1, 0.1}, {0.4, 0.5}};
    CHECK(solve(inst, p, SolveMode::greedy(), 0.01, 0, 10.0).solution.minmax == doctest::Approx(1.0));
  }

  const auto inst = generate_instance(15, 3, 13);
  SUBCASE("sample(K) reports the minimum of its rollouts") {
    const auto r = solve(inst, p, SolveMode::sample(16), 0.01, 5, 10.0);
    REQUIRE(r.sample_costs.size() == 16);
    CHECK(r.solution.minmax == *std::min_element(r.sample_costs.begin(), r.sample_costs.end()));
    CHECK(r.sample_costs[r.best_index] == r.solution.minmax);
    CHECK(validate_solution(inst, r.solution).empty());
  }
  SUBCASE("reproducible and independent of the worker count") {
    const auto a = solve(inst, p, SolveMode::sample(1), 0.01, 7, 10.0);
    const auto b = solve(inst, p, SolveMode::sample(1), 0.01, 7, 10.0);
    CHECK(a.solution.tours == b.solution.tours);
    const auto s1 = solve(inst, p, SolveMode::sample(8), 0.01, 7, 10.0, 1);
    const auto s4 = solve(inst, p, SolveMode::sample(8), 0.01, 7, 10.0, 4);
    CHECK(s1.sample_costs == s4.sample_costs);
    CHECK(s1.solution.tours == s4.solution.tours);
  }
  SUBCASE("zero samples is an error") {
    CHECK_THROWS_AS(solve(inst, p, SolveMode::sample(0), 0.01, 0, 10.0), InvalidArgument);
  }
}
