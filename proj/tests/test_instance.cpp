#include <doctest.h>

#include <algorithm>
#include <limits>
#include <sstream>

#include "dan/baselines.hpp"
#include "dan/errors.hpp"
#include "dan/instance.hpp"
#include "dan/random.hpp"

using namespace dan;

namespace {

MtspInstance make(std::vector<Point> coords, int m) {
  MtspInstance inst;
  inst.m = m;
  inst.coords = std::move(coords);
  return inst;
}

// Independent oracle: every permutation of the cities, cut into m
// consecutive (possibly empty) runs. Only m <= 2.
double permutation_split_oracle(const MtspInstance& inst) {
  std::vector<int> cities(inst.n() - 1);
  for (int i = 0; i < inst.n() - 1; ++i) cities[i] = i + 1;
  double best = std::numeric_limits<double>::infinity();
  do {
    const int k = static_cast<int>(cities.size());
    for (int cut = 0; cut <= (inst.m == 1 ? 0 : k); ++cut) {
      std::vector<int> a{0}, b{0};
      for (int i = 0; i < k; ++i) (inst.m == 1 || i < cut ? a : b).push_back(cities[i]);
      a.push_back(0);
      b.push_back(0);
      double cost = tour_length(inst, a);
      if (inst.m == 2) cost = std::max(cost, tour_length(inst, b));
      best = std::min(best, cost);
    }
  } while (std::next_permutation(cities.begin(), cities.end()));
  return best;
}

}  // namespace

TEST_CASE("generate_instance draws coordinates in the unit square") {
  const auto inst = generate_instance(50, 5, 7);
  CHECK(inst.n() == 50);
  CHECK(inst.m == 5);
  CHECK(inst.scale == 1.0);
  for (const auto& p : inst.coords) {
    CHECK(p.x >= 0.0);
    CHECK(p.x <= 1.0);
    CHECK(p.y >= 0.0);
    CHECK(p.y <= 1.0);
  }
}

TEST_CASE("generate_instance boundary, determinism and errors") {
  CHECK(generate_instance(2, 1, 0).n() == 2);
  const auto a = generate_instance(30, 3, 11);
  const auto b = generate_instance(30, 3, 11);
  const auto c = generate_instance(30, 3, 12);
  bool identical = true, differs = false;
  for (int i = 0; i < 30; ++i) {
    identical = identical && a.coords[i].x == b.coords[i].x && a.coords[i].y == b.coords[i].y;
    differs = differs || a.coords[i].x != c.coords[i].x;
  }
  CHECK(identical);
  CHECK(differs);
  CHECK_THROWS_AS(generate_instance(1, 1, 0), InvalidArgument);
  CHECK_THROWS_AS(generate_instance(5, 0, 0), InvalidArgument);
}

TEST_CASE("tour_length examples") {
  const auto inst = make({{0, 0}, {0, 0.5}, {1, 0}, {1, 1}, {0, 1}}, 1);
  CHECK(tour_length(inst, std::vector<int>{0, 1, 0}) == doctest::Approx(1.0));
  CHECK(tour_length(inst, std::vector<int>{0, 0}) == 0.0);
  CHECK(tour_length(inst, std::vector<int>{0}) == 0.0);
  CHECK(tour_length(inst, std::vector<int>{0, 2, 3, 4, 0}) == doctest::Approx(4.0));
  CHECK_THROWS_AS(tour_length(inst, std::vector<int>{0, 9, 0}), InvalidArgument);
}

TEST_CASE("tour_length is symmetric under reversal") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = generate_instance(12, 1, seed);
    std::vector<int> tour{0};
    for (int i = 1; i < 12; ++i) tour.push_back(i);
    tour.push_back(0);
    Rng rng(seed);
    std::shuffle(tour.begin() + 1, tour.end() - 1, rng);
    std::vector<int> rev(tour.rbegin(), tour.rend());
    CHECK(tour_length(inst, tour) == doctest::Approx(tour_length(inst, rev)).epsilon(1e-12));
  }
}

TEST_CASE("minmax_cost") {
  const auto inst = make({{0, 0}, {0.5, 0}, {0, 1}}, 2);
  const auto sol = make_solution(inst, {{0, 1, 0}, {0, 2, 0}});
  CHECK(sol.lengths[0] == doctest::Approx(1.0));
  CHECK(sol.lengths[1] == doctest::Approx(2.0));
  CHECK(minmax_cost(inst, sol) == doctest::Approx(2.0));

  const auto single = make({{0, 0}, {0.5, 0}, {0, 1}}, 1);
  const auto one = make_solution(single, {{0, 1, 2, 0}});
  CHECK(minmax_cost(single, one) == tour_length(single, one.tours[0]));

  const auto swapped = make_solution(inst, {{0, 2, 0}, {0, 1, 0}});
  CHECK(minmax_cost(inst, swapped) == minmax_cost(inst, sol));

  auto bad = sol;
  bad.tours[1].pop_back();
  CHECK_THROWS_AS(minmax_cost(inst, bad), ValidationError);

  const auto sym = make({{0, 0}, {1, 0}, {0, 1}}, 2);
  CHECK(brute_force_minmax(sym).first == doctest::Approx(2.0));
  CHECK(permutation_split_oracle(sym) == doctest::Approx(2.0));
}

TEST_CASE("validate_solution reports each violation kind") {
  const auto inst = generate_instance(5, 2, 3);
  const auto ok = make_solution(inst, {{0, 1, 2, 0}, {0, 3, 4, 0}});
  CHECK(validate_solution(inst, ok).empty());
  std::size_t visits = 0;
  for (const auto& t : ok.tours) visits += t.size();
  CHECK(visits == 8u);

  auto kinds = [&](const Solution& s) {
    std::vector<ViolationKind> out;
    for (const auto& v : validate_solution(inst, s)) out.push_back(v.kind);
    return out;
  };
  auto has = [](const std::vector<ViolationKind>& ks, ViolationKind k) {
    return std::find(ks.begin(), ks.end(), k) != ks.end();
  };

  const auto dup = make_solution(inst, {{0, 1, 3, 2, 0}, {0, 3, 4, 0}});
  CHECK(has(kinds(dup), ViolationKind::kDuplicateCity));
  CHECK(has(kinds(dup), ViolationKind::kVisitCount));

  const auto open = make_solution(inst, {{0, 1, 2}, {0, 3, 4, 0}});
  CHECK(has(kinds(open), ViolationKind::kBadEndpoint));

  const auto missing = make_solution(inst, {{0, 1, 0}, {0, 3, 4, 0}});
  CHECK(has(kinds(missing), ViolationKind::kMissingCity));

  auto wrong_len = ok;
  wrong_len.lengths[0] += 1e-6;
  CHECK(has(kinds(wrong_len), ViolationKind::kLengthMismatch));

  auto within_tol = ok;
  within_tol.lengths[0] += 1e-12;
  within_tol.minmax = std::max(within_tol.lengths[0], within_tol.lengths[1]);
  CHECK(validate_solution(inst, within_tol).empty());

  const auto three = make_solution(inst, {{0, 1, 2, 0}, {0, 3, 0}, {0, 4, 0}});
  CHECK(has(kinds(three), ViolationKind::kTourCount));

  const auto out_of_range = make_solution(inst, {{0, 1, 2, 0}, {0, 3, 4, 0}});
  auto bad_index = out_of_range;
  bad_index.tours[0][1] = 17;
  CHECK(has(kinds(bad_index), ViolationKind::kIndexOutOfRange));
}

TEST_CASE("brute_force_minmax matches the independent permutation-split oracle") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng rng(seed);
    const int n = uniform_int(rng, 2, 7);
    const int m = uniform_int(rng, 1, 2);
    const auto inst = generate_instance(n, m, seed + 100);
    const auto [cost, sol] = brute_force_minmax(inst);
    CHECK(validate_solution(inst, sol).empty());
    CHECK(sol.minmax == cost);
    CHECK(cost == doctest::Approx(permutation_split_oracle(inst)).epsilon(1e-12));
  }
}

TEST_CASE("brute_force_minmax single agent with three cities") {
  const auto inst = generate_instance(4, 1, 42);
  CHECK(brute_force_minmax(inst).first == doctest::Approx(permutation_split_oracle(inst)).epsilon(1e-12));
}

TEST_CASE("brute_force_minmax guards against blowup") {
  CHECK_THROWS_AS(brute_force_minmax(generate_instance(11, 2, 0)), TooLarge);
  CHECK_THROWS_AS(brute_force_minmax(generate_instance(6, 4, 0)), TooLarge);
  CHECK_NOTHROW(brute_force_minmax(generate_instance(10, 3, 0)));
}

TEST_CASE("brute force dominates the heuristics on tiny instances") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const auto inst = generate_instance(uniform_int(rng, 2, 8), uniform_int(rng, 1, 2), seed);
    const double opt = brute_force_minmax(inst).first;
    CHECK(nn_solve(inst, 0.1).minmax >= opt - 1e-9);
    CHECK(two_opt_improve(inst, nn_solve(inst, 0.1)).minmax >= opt - 1e-9);
    CHECK(random_solve(inst, 0.1, seed).minmax >= opt - 1e-9);
  }
}

TEST_CASE("normalize") {
  const std::vector<Point> pts{{0, 0}, {100, 50}, {20, 100}};
  const auto inst = normalize(pts, 2, "box");
  CHECK(inst.scale == 100.0);
  CHECK(inst.name == "box");
  for (const auto& p : inst.coords) {
    CHECK(p.x >= 0.0);
    CHECK(p.x <= 1.0);
    CHECK(p.y >= 0.0);
    CHECK(p.y <= 1.0);
  }
  CHECK(inst.coords[1].x == 1.0);
  CHECK(inst.coords[1].y == 0.5);

  const std::vector<Point> unit{{0, 0}, {1, 1}, {0.25, 0.75}};
  const auto same = normalize(unit, 1);
  CHECK(same.scale == 1.0);
  for (std::size_t i = 0; i < unit.size(); ++i) {
    CHECK(same.coords[i].x == unit[i].x);
    CHECK(same.coords[i].y == unit[i].y);
  }

  const std::vector<Point> stacked{{3, 3}, {3, 3}};
  CHECK_THROWS_AS(normalize(stacked, 1), DegenerateInstance);
}

TEST_CASE("normalized cost times scale reproduces source-unit cost") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<Point> pts(15);
    for (auto& p : pts) p = {-500.0 + 2000.0 * uniform01(rng), 300.0 * uniform01(rng)};
    MtspInstance raw;
    raw.m = 1;
    raw.coords = pts;
    const auto inst = normalize(pts, 1);
    std::vector<int> tour{0};
    for (int i = 1; i < 15; ++i) tour.push_back(i);
    tour.push_back(0);
    const double source = tour_length(raw, tour);
    CHECK(std::abs(tour_length(inst, tour) * inst.scale - source) / source < 1e-6);
  }
}

TEST_CASE("parse_tsplib reads eil51") {
  const auto inst = load_tsplib(std::string(DAN_TEST_DATA) + "/eil51.tsp", 5);
  CHECK(inst.n() == 51);
  CHECK(inst.m == 5);
  CHECK(inst.name == "eil51");
  // x spans 5..63, y spans 6..69
  CHECK(inst.scale == 63.0);
}

TEST_CASE("parse_tsplib: lower-case keys, extra whitespace, no EOF marker") {
  const auto inst = load_tsplib(std::string(DAN_TEST_DATA) + "/tiny.tsp", 2);
  CHECK(inst.n() == 3);
  CHECK(inst.scale == 100.0);
  CHECK(inst.coords[1].x == 1.0);
  CHECK(inst.coords[2].y == 0.5);
}

TEST_CASE("parse_tsplib error paths") {
  SUBCASE("truncated coordinate section names the section") {
    try {
      load_tsplib(std::string(DAN_TEST_DATA) + "/truncated.tsp", 1);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("NODE_COORD_SECTION") != std::string::npos);
    }
  }
  SUBCASE("missing DIMENSION") {
    std::istringstream in("NAME: x\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n");
    CHECK_THROWS_AS(parse_tsplib(in, 1), ParseError);
  }
  SUBCASE("missing NODE_COORD_SECTION") {
    std::istringstream in("NAME: x\nDIMENSION: 2\nEDGE_WEIGHT_TYPE: EUC_2D\n");
    try {
      parse_tsplib(in, 1);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
      CHECK(std::string(e.what()).find("NODE_COORD_SECTION") != std::string::npos);
    }
  }
  SUBCASE("unsupported edge weights") {
    std::istringstream in("NAME: x\nDIMENSION: 2\nEDGE_WEIGHT_TYPE: GEO\nNODE_COORD_SECTION\n1 0 0\n2 1 1\nEOF\n");
    CHECK_THROWS_AS(parse_tsplib(in, 1), UnsupportedFormat);
  }
  SUBCASE("bad coordinate line") {
    std::istringstream in("DIMENSION: 2\nNODE_COORD_SECTION\n1 0 zero\n");
    CHECK_THROWS_AS(parse_tsplib(in, 1), ParseError);
  }
}

TEST_CASE("instance interchange keeps every bit") {
  auto inst = generate_instance(20, 3, 5);
  inst.name = "r20";
  inst.scale = 1.0 / 3.0;
  const auto back = instance_from_json(instance_to_json(inst));
  CHECK(back.name == "r20");
  CHECK(back.m == 3);
  CHECK(back.scale == inst.scale);
  REQUIRE(back.n() == 20);
  for (int i = 0; i < 20; ++i) {
    CHECK(back.coords[i].x == inst.coords[i].x);
    CHECK(back.coords[i].y == inst.coords[i].y);
  }
  CHECK_THROWS_AS(instance_from_json("{\"m\": 2}"), ParseError);
  CHECK_THROWS_AS(instance_from_json("not json"), ParseError);
}
