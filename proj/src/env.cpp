#include "dan/env.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace dan {

bool EnvState::done() const {
  return std::none_of(active.begin(), active.end(), [](std::uint8_t a) { return a != 0; });
}

EnvState reset(const MtspInstance& inst, double dg) {
  if (!(dg > 0.0)) throw InvalidArgument("reset: dg must be positive");
  if (inst.n() < 2 || inst.m < 1) throw InvalidArgument("reset: need n >= 2 and m >= 1");
  EnvState s;
  s.inst = &inst;
  s.visited.assign(inst.n(), 0);
  s.agent_dest.assign(inst.m, 0);
  s.g.assign(inst.m, 0.0);
  s.active.assign(inst.m, 1);
  s.partial_tours.assign(inst.m, std::vector<int>{0});
  s.dg = dg;
  return s;
}

bool depot_selectable(const EnvState& state, int agent) {
  if (state.all_visited()) return true;
  for (int j = 0; j < state.m(); ++j) {
    if (j != agent && state.active[j] && !state.returning(j)) return true;
  }
  return false;
}

namespace {

void require_deciding(const EnvState& state, int agent) {
  if (agent < 0 || agent >= state.m()) throw InvalidArgument("agent index " + std::to_string(agent) + " out of range");
  if (!state.active[agent] || state.returning(agent) || state.g[agent] > 0.0) {
    throw NotDeciding("agent " + std::to_string(agent) + " is not due to decide");
  }
}

}  // namespace

Observation observe(const EnvState& state, int agent) {
  require_deciding(state, agent);
  const auto& coords = state.inst->coords;
  const Point self = coords[state.agent_dest[agent]];

  Observation obs;
  obs.observer = agent;
  obs.cities_rel.resize(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) obs.cities_rel[i] = {coords[i].x - self.x, coords[i].y - self.y};
  obs.agents_rel.resize(state.m());
  for (int j = 0; j < state.m(); ++j) {
    const Point p = coords[state.agent_dest[j]];
    const double g = state.active[j] ? std::max(state.g[j], 0.0) : 0.0;
    obs.agents_rel[j] = {p.x - self.x, p.y - self.y, g};
  }
  obs.mask = state.visited;
  obs.mask[0] = depot_selectable(state, agent) ? 0 : 1;
  return obs;
}

void step_select(EnvState& state, int agent, int city) {
  require_deciding(state, agent);
  if (city < 0 || city >= state.n()) {
    throw ConstraintViolation("city index " + std::to_string(city) + " out of range");
  }
  if (city == 0) {
    if (!depot_selectable(state, agent)) {
      throw ConstraintViolation("agent " + std::to_string(agent) +
                                " is the last available agent and cities remain; depot is forbidden");
    }
  } else if (state.visited[city]) {
    throw ConstraintViolation("city " + std::to_string(city) + " already visited");
  }
  const int from = state.agent_dest[agent];
  state.partial_tours[agent].push_back(city);
  if (city != 0) {
    state.visited[city] = 1;
    ++state.visited_count;
  }
  state.g[agent] = state.inst->cost(from, city);
  state.agent_dest[agent] = city;
}

std::vector<int> advance_time(EnvState& state) {
  std::vector<int> deciders;
  for (int i = 0; i < state.m(); ++i) {
    if (!state.active[i]) continue;
    state.g[i] -= state.dg;
    if (state.g[i] > 0.0) continue;
    if (state.returning(i)) {
      state.active[i] = 0;
    } else {
      deciders.push_back(i);
    }
  }
  ++state.clock;
  return deciders;
}

Episode run_episode(const MtspInstance& inst, const Policy& policy, double dg, bool keep_observations) {
  EnvState state = reset(inst, dg);
  Trajectory traj;
  while (!state.done()) {
    for (int agent : advance_time(state)) {
      Observation obs = observe(state, agent);
      const Decision d = policy(obs);
      try {
        step_select(state, agent, d.city);
      } catch (const ConstraintViolation& e) {
        throw EpisodeAborted(std::string("policy chose an illegal action: ") + e.what(), std::move(traj));
      }
      Trajectory::Record rec;
      rec.clock = state.clock;
      rec.agent = agent;
      rec.city = d.city;
      rec.log_prob = d.log_prob;
      if (keep_observations) rec.obs = std::move(obs);
      traj.records.push_back(std::move(rec));
    }
  }
  Episode ep;
  ep.solution = make_solution(inst, std::move(state.partial_tours));
  require_valid(inst, ep.solution);
  traj.minmax = ep.solution.minmax;
  traj.reward = -ep.solution.minmax;
  ep.trajectory = std::move(traj);
  return ep;
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  char buf[160];
  for (const auto& r : traj.records) {
    std::snprintf(buf, sizeof buf, "{\"clock\":%ld,\"agent\":%d,\"city\":%d,\"log_prob\":%.17g}\n", r.clock, r.agent,
                  r.city, r.log_prob);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "{\"reward\":%.17g,\"minmax\":%.17g}\n", traj.reward, traj.minmax);
  out << buf;
}

}  // namespace dan
