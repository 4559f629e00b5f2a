#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "dan/errors.hpp"
#include "dan/instance.hpp"

namespace dan {

// What a deciding agent sees. Everything positional is relative to the
// observer's current city, so translating the instance leaves it unchanged.
struct Observation {
  struct AgentState {
    double x = 0.0;
    double y = 0.0;
    double g = 0.0;  // remaining travel time, clamped at 0
  };

  int observer = 0;
  // n entries; entry 0 is the depot.
  std::vector<Point> cities_rel;
  // m entries, the observer included as (0, 0, 0).
  std::vector<AgentState> agents_rel;
  // 1 = not selectable. Visited cities are masked; the depot is masked only
  // under the deadlock guard.
  std::vector<std::uint8_t> mask;

  int n() const { return static_cast<int>(cities_rel.size()); }
  int m() const { return static_cast<int>(agents_rel.size()); }
};

struct EnvState {
  const MtspInstance* inst = nullptr;
  std::vector<std::uint8_t> visited;  // visit history; visited[0] stays 0
  std::vector<int> agent_dest;        // last selected city, the observable position
  std::vector<double> g;              // remaining travel time
  std::vector<std::uint8_t> active;   // 0 once back at the depot for good
  std::vector<std::vector<int>> partial_tours;
  double dg = 0.1;
  long clock = 0;
  int visited_count = 0;

  int n() const { return inst->n(); }
  int m() const { return inst->m; }
  bool returning(int agent) const {
    const auto& t = partial_tours[agent];
    return t.size() > 1 && t.back() == 0;
  }
  bool all_visited() const { return visited_count == n() - 1; }
  bool done() const;
};

// Default time steps for training and evaluation rollouts.
inline constexpr double kTrainDg = 0.1;
inline constexpr double kEvalDg = 0.01;

EnvState reset(const MtspInstance& inst, double dg);

// True when `agent` may close its tour now: false only for the last agent
// still able to take cities while some city is unvisited.
bool depot_selectable(const EnvState& state, int agent);

// Throws NotDeciding unless the agent is active, not returning, and g <= 0.
Observation observe(const EnvState& state, int agent);

// Throws ConstraintViolation on a visited city or a forbidden depot.
void step_select(EnvState& state, int agent, int city);

// Decrements g of every active agent by dg. Agents whose return trip has
// ended become inactive; the rest with g <= 0 are returned in index order.
std::vector<int> advance_time(EnvState& state);

struct Decision {
  int city = 0;
  double log_prob = 0.0;
  Decision() = default;
  Decision(int c, double lp = 0.0) : city(c), log_prob(lp) {}  // NOLINT(google-explicit-constructor)
};

using Policy = std::function<Decision(const Observation&)>;

struct Trajectory {
  struct Record {
    long clock = 0;
    int agent = 0;
    int city = 0;
    double log_prob = 0.0;
    Observation obs;  // left empty when observations are not kept
  };
  std::vector<Record> records;
  double reward = 0.0;  // -minmax, shared by all agents
  double minmax = 0.0;
};

struct Episode {
  Solution solution;
  Trajectory trajectory;
};

class EpisodeAborted : public ConstraintViolation {
 public:
  EpisodeAborted(const std::string& what, Trajectory partial)
      : ConstraintViolation(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

// Runs the asynchronous decision process to completion. Simultaneous
// deciders act in ascending index order, each seeing the previous choices.
Episode run_episode(const MtspInstance& inst, const Policy& policy, double dg, bool keep_observations = true);

// One JSON object per line: decisions, then a terminal {reward, minmax}.
void write_trajectory(std::ostream& out, const Trajectory& traj);

}  // namespace dan
