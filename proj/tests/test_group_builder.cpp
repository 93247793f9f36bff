#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "slasso/pattern_algebra.hpp"

using namespace slasso;

namespace {

const double kPi = 3.141592653589793;

PatternFamily contiguous_intervals(std::size_t l) {
  std::vector<VariableSet> out;
  out.emplace_back(l);
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = a; b < l; ++b) {
      VariableSet s(l);
      for (std::size_t j = a; j <= b; ++j) s.insert(j);
      out.push_back(s);
    }
  return PatternFamily(l, std::move(out));
}

PatternFamily axis_rectangles(std::size_t h, std::size_t l) {
  std::vector<VariableSet> out;
  out.emplace_back(h * l);
  for (std::size_t r0 = 0; r0 < h; ++r0)
    for (std::size_t r1 = r0; r1 < h; ++r1)
      for (std::size_t c0 = 0; c0 < l; ++c0)
        for (std::size_t c1 = c0; c1 < l; ++c1) {
          VariableSet s(h * l);
          for (std::size_t r = r0; r <= r1; ++r)
            for (std::size_t c = c0; c <= c1; ++c) s.insert(grid_index(c, r, l));
          out.push_back(s);
        }
  return PatternFamily(h * l, std::move(out));
}

std::vector<VariableSet> group_sets(const GroupSystem& sys) {
  std::vector<VariableSet> out;
  for (const auto& g : sys.groups()) out.push_back(g.vars());
  std::sort(out.begin(), out.end(), VariableSet::canonical_less);
  return out;
}

}  // namespace

TEST_CASE("sequence groups for small lengths") {
  const auto sys = sequence_groups(4);
  CHECK(sys.p() == 4);
  CHECK(group_sets(sys) ==
        std::vector<VariableSet>{VariableSet(4, {0}), VariableSet(4, {3}), VariableSet(4, {0, 1}),
                                 VariableSet(4, {2, 3}), VariableSet(4, {0, 1, 2}),
                                 VariableSet(4, {1, 2, 3})});

  const auto tiny = sequence_groups(2);
  CHECK(group_sets(tiny) == std::vector<VariableSet>{VariableSet(2, {0}), VariableSet(2, {1})});

  CHECK_THROWS_AS(sequence_groups(1), std::invalid_argument);
}

TEST_CASE("sequence orientations are the prefix and suffix chains") {
  const auto sys = sequence_groups(5);
  CHECK(sys.orientations().size() == 2);
  for (const auto& g : sys.groups()) {
    REQUIRE(g.theta().has_value());
    if (*g.theta() == 0.0)
      CHECK(g.vars().contains(0));
    else
      CHECK(g.vars().contains(4));
  }
}

TEST_CASE("sequence closure size for l=4") {
  CHECK(forward_closure(sequence_groups(4)).size() == 11);
}

TEST_CASE("sequence nonzero patterns are exactly the contiguous intervals") {
  for (std::size_t l = 2; l <= 8; ++l) {
    const auto pf = complement_family(forward_closure(sequence_groups(l)));
    CHECK(pf == contiguous_intervals(l));
  }
}

TEST_CASE("grid layout and axis-aligned groups on 2x2") {
  CHECK(grid_index(1, 0, 3) == 1);
  CHECK(grid_index(0, 1, 3) == 3);

  const auto sys = grid_groups(2, 2, axis_aligned_thetas());
  CHECK(sys.p() == 4);
  CHECK(sys.group_count() == 4);
  for (const auto& g : sys.groups()) CHECK(g.size() == 2);
  CHECK(group_sets(sys) ==
        std::vector<VariableSet>{VariableSet(4, {0, 1}), VariableSet(4, {0, 2}),
                                 VariableSet(4, {1, 3}), VariableSet(4, {2, 3})});
}

TEST_CASE("axis-aligned group count is 2(h-1)+2(l-1)") {
  CHECK(grid_groups(3, 3, axis_aligned_thetas()).group_count() == 8);
  CHECK(grid_groups(2, 4, axis_aligned_thetas()).group_count() == 8);
  CHECK(grid_groups(4, 4, axis_aligned_thetas()).group_count() == 12);
}

TEST_CASE("grid nonzero patterns are exactly the axis-aligned rectangles") {
  for (std::size_t h = 2; h <= 4; ++h)
    for (std::size_t l = 2; l <= 4; ++l) {
      const auto pf = complement_family(forward_closure(grid_groups(h, l, axis_aligned_thetas())));
      CHECK(pf == axis_rectangles(h, l));
    }
}

TEST_CASE("anti-diagonal half-planes on a 3x3 grid") {
  const auto sys = grid_groups(3, 3, {kPi / 4});
  // lower sets of i+j <= k for k = 0,1,2,3; k=4 is the full grid and excluded
  REQUIRE(sys.group_count() == 4);
  std::vector<std::size_t> sizes;
  for (const auto& g : sys.groups()) sizes.push_back(g.size());
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<std::size_t>{1, 3, 6, 8});
  CHECK(sys.group(0).vars() == VariableSet(9, {grid_index(0, 0, 3)}));
}

TEST_CASE("non-integer tangent orientations still give nested chains") {
  const auto sys = grid_groups(3, 4, {0.4, kPi / 3, -2.1});
  CHECK(sys.group_count() > 0);
  for (double theta : sys.orientations()) {
    std::vector<VariableSet> chain;
    for (const auto& g : sys.groups())
      if (g.theta() && *g.theta() == theta) chain.push_back(g.vars());
    for (std::size_t a = 0; a < chain.size(); ++a)
      for (std::size_t b = a + 1; b < chain.size(); ++b)
        CHECK((chain[a].is_subset_of(chain[b]) || chain[b].is_subset_of(chain[a])));
  }
}

TEST_CASE("grid input validation") {
  CHECK_THROWS_AS(grid_groups(1, 3, axis_aligned_thetas()), std::invalid_argument);
  CHECK_THROWS_AS(grid_groups(3, 3, {}), std::invalid_argument);
  CHECK_THROWS_AS(grid_groups(3, 3, {4.0}), std::invalid_argument);
}

TEST_CASE("per-orientation chains are nested for sequences and grids") {
  for (const auto& sys : {sequence_groups(7), grid_groups(3, 5, axis_aligned_thetas()),
                          grid_groups(4, 4, {0.0, kPi / 4, kPi / 2, 3 * kPi / 4})}) {
    for (double theta : sys.orientations()) {
      std::vector<VariableSet> chain;
      for (const auto& g : sys.groups())
        if (g.theta() && *g.theta() == theta) chain.push_back(g.vars());
      for (std::size_t a = 0; a < chain.size(); ++a)
        for (std::size_t b = a + 1; b < chain.size(); ++b)
          CHECK((chain[a].is_subset_of(chain[b]) || chain[b].is_subset_of(chain[a])));
    }
  }
}

TEST_CASE("weight schemes") {
  const auto sys = sequence_groups(3);

  const auto w1 = assign_weights(sys, WeightScheme::kW1);
  for (const auto& g : w1.groups())
    for (double d : g.weights()) CHECK(d == 1.0);

  const auto w2 = assign_weights(sys, WeightScheme::kW2);
  for (const auto& g : w2.groups())
    for (double d : g.weights())
      CHECK(d == doctest::Approx(1.0 / (double(g.size()) * double(g.size()))));

  const auto w3 = assign_weights(sys, WeightScheme::kW3, 0.5);
  for (const auto& g : w3.groups()) {
    if (g.vars() == VariableSet(3, {0, 1})) {
      CHECK(g.weight_of(0) == doctest::Approx(0.5));  // one strict subgroup {0} contains 0
      CHECK(g.weight_of(1) == doctest::Approx(1.0));
    }
    for (double d : g.weights()) {
      CHECK(d > 0.0);
      CHECK(d <= 1.0);
    }
  }

  CHECK_THROWS_AS(assign_weights(sys, WeightScheme::kW3), std::invalid_argument);
  CHECK_THROWS_AS(assign_weights(sys, WeightScheme::kW3, 1.5), std::invalid_argument);
}

TEST_CASE("W3 ignores an added full group") {
  const auto sys = add_full_group(sequence_groups(4), 0.25);
  const auto w3 = assign_weights(sys, WeightScheme::kW3, 0.5);
  bool saw_full = false;
  for (const auto& g : w3.groups()) {
    if (!g.vars().is_full()) continue;
    saw_full = true;
    for (double d : g.weights()) CHECK(d == 0.25);
  }
  CHECK(saw_full);

  // counts match the plain system: the full group is not a strict subgroup anyway
  const auto plain = assign_weights(sequence_groups(4), WeightScheme::kW3, 0.5);
  for (std::size_t g = 0; g < plain.group_count(); ++g)
    CHECK(plain.group(g).weights() == w3.group(g).weights());
}

TEST_CASE("add_full_group appends and repeats") {
  const auto base = sequence_groups(4);
  const auto once = add_full_group(base, 1.0);
  CHECK(once.group_count() == base.group_count() + 1);
  CHECK(once.group(once.group_count() - 1).vars() == VariableSet::all(4));

  const auto twice = add_full_group(once, 2.0);
  CHECK(twice.group_count() == base.group_count() + 2);

  CHECK_THROWS_AS(add_full_group(base, 0.0), std::invalid_argument);
}

TEST_CASE("membership cache lists exactly the containing groups") {
  const auto sys = grid_groups(3, 3, axis_aligned_thetas());
  for (std::size_t j = 0; j < sys.p(); ++j) {
    for (std::size_t g = 0; g < sys.group_count(); ++g) {
      const bool cached = std::find(sys.groups_containing(j).begin(),
                                    sys.groups_containing(j).end(),
                                    g) != sys.groups_containing(j).end();
      CHECK(cached == sys.group(g).vars().contains(j));
    }
  }
  CHECK(sys.covers_all_variables());
}

TEST_CASE("group system json round trip") {
  auto sys = assign_weights(grid_groups(2, 3, axis_aligned_thetas()), WeightScheme::kW3, 0.4);
  sys = add_full_group(sys, 0.7);
  const auto j = sys.to_json();
  CHECK(j["p"] == 6);
  CHECK(j["topology"]["kind"] == "grid");
  const auto back = GroupSystem::from_json(j);
  REQUIRE(back.group_count() == sys.group_count());
  for (std::size_t g = 0; g < back.group_count(); ++g) {
    CHECK(back.group(g).vars() == sys.group(g).vars());
    CHECK(back.group(g).weights() == sys.group(g).weights());
    CHECK(back.group(g).theta() == sys.group(g).theta());
  }
  CHECK(std::get<GridTopology>(back.topology()).h == 2);
}
