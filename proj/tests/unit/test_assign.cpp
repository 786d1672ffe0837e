#include <doctest.h>

#include <random>

#include "../support/oracles.hpp"
#include "treegeo/assign.hpp"
#include "treegeo/io.hpp"

using namespace treegeo;

namespace {

AssignmentResult solve(const oracle::Instance& in) {
  return solve_assignment(in.candidates, in.capacity, in.trees, in.m);
}

void check_feasible(const oracle::Instance& in, const AssignmentResult& r) {
  std::vector<int> used(in.capacity.size(), 0);
  std::vector<int> tree_used(in.trees, 0);
  double objective = 0.0;
  for (const auto& m : r.matches) {
    CHECK(++tree_used[m.tree_index] == 1);
    CHECK(++used[m.address_index] <= in.capacity[m.address_index]);
    CHECK(m.dist_m <= in.m);
    CHECK(std::find(in.candidates.begin(), in.candidates.end(), m) != in.candidates.end());
    objective += in.m - m.dist_m;
  }
  CHECK(r.objective_value == objective);
  CHECK(std::is_sorted(r.matches.begin(), r.matches.end(), [](const Match& a, const Match& b) {
    return std::tie(a.address_index, a.tree_index) < std::tie(b.address_index, b.tree_index);
  }));
}

}  // namespace

TEST_CASE("assign: one address, one tree at 10 m") {
  const std::vector<CandidatePair> c{{0, 0, 10.0}};
  const std::vector<int> k{1};
  const auto r = solve_assignment(c, k, 1);
  REQUIRE(r.matches.size() == 1);
  CHECK(r.objective_value == 40.0);
  CHECK(r.unmatched_trees == 0);
  CHECK(r.unfilled_capacity == 0);
}

TEST_CASE("assign: tree beyond M produces no candidates and no matches") {
  const GeoPoint a{37.0, -122.0};
  const std::vector<GeoPoint> addrs{a};
  const std::vector<GeoPoint> trees{offset(a, 45.0, 60.0)};
  const auto c = build_candidates(addrs, trees);
  CHECK(c.empty());
  const std::vector<int> k{1};
  const auto r = solve_assignment(c, k, 1);
  CHECK(r.matches.empty());
  CHECK(r.unmatched_trees == 1);
  CHECK(r.unfilled_capacity == 1);
}

TEST_CASE("candidates: 49 m in, 51 m out, empty tree list") {
  const GeoPoint a{10.0, 20.0};
  const std::vector<GeoPoint> addrs{a};
  const std::vector<GeoPoint> trees{offset(a, 10.0, 49.0), offset(a, 200.0, 51.0)};
  const auto c = build_candidates(addrs, trees);
  REQUIRE(c.size() == 1);
  CHECK(c[0].tree_index == 0);
  CHECK(build_candidates(addrs, std::vector<GeoPoint>{}).empty());
}

TEST_CASE("candidates: equal to the brute-force filter") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> brg(0.0, 360.0), d(0.0, 700.0), lat(-70.0, 70.0), lon(-170.0, 170.0);
  for (int trial = 0; trial < 10; ++trial) {
    const GeoPoint o{lat(rng), lon(rng)};
    std::vector<GeoPoint> a, t;
    for (int i = 0; i < 60; ++i) a.push_back(offset(o, brg(rng), d(rng)));
    for (int i = 0; i < 150; ++i) t.push_back(offset(o, brg(rng), d(rng)));
    CHECK(build_candidates(a, t, 50.0) == oracle::brute_candidates(a, t, 50.0));
    CHECK(build_candidates(a, t, 7.5) == oracle::brute_candidates(a, t, 7.5));
  }
}

TEST_CASE("candidates: unusable geocodes are rejected") {
  std::vector<GeocodedAddress> a{{"X", std::nullopt, Accuracy::Failed, 1, false}};
  std::vector<FusedTree> t(1);
  CHECK_THROWS_AS(build_candidates(a, t), std::invalid_argument);
}

TEST_CASE("assign: capacity is honoured and the closest trees win") {
  // one address with K = 2, three trees
  const std::vector<CandidatePair> c{{0, 0, 30.0}, {0, 1, 5.0}, {0, 2, 10.0}};
  const std::vector<int> k{2};
  const auto r = solve_assignment(c, k, 3);
  REQUIRE(r.matches.size() == 2);
  CHECK(r.matches[0].tree_index == 1);
  CHECK(r.matches[1].tree_index == 2);
  CHECK(r.objective_value == 85.0);
  CHECK(r.unmatched_trees == 1);
}

TEST_CASE("assign: the global optimum beats greedy nearest matching") {
  // greedy would give tree 0 to address 0 (1 m) and leave address 1 empty
  const std::vector<CandidatePair> c{{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 3.0}};
  const std::vector<int> k{1, 1};
  const auto r = solve_assignment(c, k, 2);
  REQUIRE(r.matches.size() == 2);
  CHECK(r.objective_value == 48.0 + 47.0);
}

TEST_CASE("assign: zero-gain pairs at exactly M are matched") {
  const std::vector<CandidatePair> c{{0, 0, 50.0}};
  const std::vector<int> k{1};
  const auto r = solve_assignment(c, k, 1);
  CHECK(r.matches.size() == 1);
  CHECK(r.objective_value == 0.0);
}

TEST_CASE("assign: invalid input") {
  const std::vector<CandidatePair> c{{0, 0, 10.0}};
  CHECK_THROWS_AS(solve_assignment(c, std::vector<int>{0}, 1), InputError);
  CHECK_THROWS_AS(solve_assignment(c, std::vector<int>{-1}, 1), InputError);
  CHECK_THROWS_AS(solve_assignment(c, std::vector<int>{1}, 0), std::invalid_argument);
  const std::vector<CandidatePair> far{{0, 0, 60.0}};
  CHECK_THROWS_AS(solve_assignment(far, std::vector<int>{1}, 1), std::invalid_argument);
  const std::vector<CandidatePair> dup{{0, 0, 1.0}, {0, 0, 1.0}};
  CHECK_THROWS_AS(solve_assignment(dup, std::vector<int>{1}, 1), std::invalid_argument);
}

TEST_CASE("assign: objective equals exhaustive search on random instances") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 300; ++i) {
    const auto in = oracle::random_instance(rng, 8, 8, 3, 0.5, i % 2 ? 64 : 2);
    const auto r = solve(in);
    check_feasible(in, r);
    CHECK(r.objective_value == oracle::brute_force_objective(in));
  }
}

TEST_CASE("assign: returns the documented optimum among ties") {
  // Among optimal match sets, the solver keeps pairs greedily in
  // (address, tree) order: the indicator vector over the sorted candidate
  // list is lexicographically largest.
  std::mt19937_64 rng(5);
  int with_ties = 0;
  for (int i = 0; i < 400; ++i) {
    const auto in = oracle::random_instance(rng, 5, 5, 2, 0.6, 0.1);  // multiples of 10 m: many ties
    const auto optima = oracle::all_optima(in);
    if (optima.size() > 1) ++with_ties;
    const auto expected = *std::max_element(optima.begin(), optima.end());
    const auto r = solve(in);
    std::vector<char> got(in.candidates.size(), 0);
    for (const auto& m : r.matches) {
      got[static_cast<std::size_t>(std::find(in.candidates.begin(), in.candidates.end(), m) - in.candidates.begin())] = 1;
    }
    CHECK(got == expected);
  }
  CHECK(with_ties > 50);
}

TEST_CASE("assign: adding a candidate never lowers the optimum") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    auto in = oracle::random_instance(rng, 6, 6, 3, 0.4, 64);
    const double before = solve(in).objective_value;
    // add a pair that is not yet present
    for (std::size_t a = 0; a < in.capacity.size(); ++a) {
      for (std::size_t t = 0; t < in.trees; ++t) {
        auto it = std::find_if(in.candidates.begin(), in.candidates.end(),
                               [&](const CandidatePair& c) { return c.address_index == a && c.tree_index == t; });
        if (it != in.candidates.end()) continue;
        auto more = in;
        more.candidates.push_back({a, t, static_cast<double>((a * 7 + t * 13) % 50)});
        std::sort(more.candidates.begin(), more.candidates.end(), [](const auto& x, const auto& y) {
          return std::tie(x.address_index, x.tree_index) < std::tie(y.address_index, y.tree_index);
        });
        CHECK(solve(more).objective_value >= before);
        goto next;
      }
    }
  next:;
  }
}

TEST_CASE("assign: scaling distances and M scales the objective and keeps the match set") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const auto in = oracle::random_instance(rng, 8, 8, 3, 0.5, 16);
    const auto base = solve(in);
    for (double c : {0.5, 2.0, 4.0}) {
      auto scaled = in;
      scaled.m *= c;
      for (auto& p : scaled.candidates) p.dist_m *= c;
      const auto r = solve(scaled);
      CHECK(r.objective_value == base.objective_value * c);
      REQUIRE(r.matches.size() == base.matches.size());
      for (std::size_t k = 0; k < r.matches.size(); ++k) {
        CHECK(r.matches[k].address_index == base.matches[k].address_index);
        CHECK(r.matches[k].tree_index == base.matches[k].tree_index);
      }
    }
  }
}

TEST_CASE("expand: trees of an address are filled in inventory order") {
  std::vector<AddressGroup> groups{{"A", {"t1", "t2"}}, {"B", {"t3"}}};
  std::vector<FusedTree> trees(3);
  trees[0].point = {1, 1};
  trees[1].point = {2, 2};
  trees[2].point = {3, 3};
  SUBCASE("two detections for K = 2") {
    AssignmentResult r;
    r.matches = {{0, 0, 9.0}, {0, 2, 4.0}};
    const auto out = expand_to_trees(r, groups, trees);
    REQUIRE(out.size() == 2);
    CHECK(out[0].tree_id == "t1");
    CHECK(out[0].fused_index == 2);  // nearer detection first
    CHECK(out[1].tree_id == "t2");
    CHECK(out[1].fused_index == 0);
  }
  SUBCASE("one detection for K = 2") {
    AssignmentResult r;
    r.matches = {{0, 1, 3.0}};
    const auto out = expand_to_trees(r, groups, trees);
    REQUIRE(out.size() == 1);
    CHECK(out[0].tree_id == "t1");
    CHECK(out[0].address == "A");
    CHECK(out[0].point == GeoPoint{2, 2});
  }
  SUBCASE("over capacity is rejected") {
    AssignmentResult r;
    r.matches = {{1, 0, 1.0}, {1, 1, 2.0}};
    CHECK_THROWS_AS(expand_to_trees(r, groups, trees), std::invalid_argument);
  }
}
