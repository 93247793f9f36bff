#include <algorithm>
#include <random>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "slasso/pattern_algebra.hpp"

using namespace slasso;

namespace {

std::vector<VariableSet> sorted(std::vector<VariableSet> v) {
  std::sort(v.begin(), v.end(), VariableSet::canonical_less);
  return v;
}

}  // namespace

TEST_CASE("variable set basics") {
  VariableSet s(5, {0, 3});
  CHECK(s.count() == 2);
  CHECK(s.contains(3));
  CHECK(!s.contains(1));
  CHECK(s.complement() == VariableSet(5, {1, 2, 4}));
  CHECK((s | VariableSet(5, {1})) == VariableSet(5, {0, 1, 3}));
  CHECK((s & VariableSet(5, {3, 4})) == VariableSet(5, {3}));
  CHECK((s - VariableSet(5, {3})) == VariableSet(5, {0}));
  CHECK(VariableSet(5, {0}).is_proper_subset_of(s));
  CHECK_THROWS_AS(s | VariableSet(4), std::invalid_argument);
  CHECK_THROWS_AS(VariableSet(3).insert(3), std::invalid_argument);

  // {0,3} precedes {1,2}: same cardinality, lowest differing index is 0
  CHECK(VariableSet::canonical_less(VariableSet(5, {0, 3}), VariableSet(5, {1, 2})));
  CHECK(!VariableSet::canonical_less(VariableSet(5, {1, 2}), VariableSet(5, {0, 3})));
  CHECK(VariableSet::canonical_less(VariableSet(5, {4}), VariableSet(5, {0, 1})));
}

TEST_CASE("pattern family canonical order and json round trip") {
  PatternFamily f(3, {VariableSet(3, {1, 2}), VariableSet(3), VariableSet(3, {0}),
                      VariableSet(3, {1, 2})});
  CHECK(f.size() == 3);
  CHECK(f[0] == VariableSet(3));
  CHECK(f[1] == VariableSet(3, {0}));
  CHECK(f.contains(VariableSet(3, {1, 2})));
  CHECK(!f.contains(VariableSet(3, {1})));

  const auto j = f.to_json();
  CHECK(j["p"] == 3);
  CHECK(PatternFamily::from_json(j) == f);
}

TEST_CASE("forward closure on the two-group overlap") {
  const std::vector<VariableSet> groups = {VariableSet(3, {0, 1}), VariableSet(3, {1, 2})};
  const auto z = forward_closure(3, groups);
  const PatternFamily expected(
      3, {VariableSet(3), VariableSet(3, {0, 1}), VariableSet(3, {1, 2}), VariableSet::all(3)});
  CHECK(z == expected);
  CHECK(z == oracle::closure_by_enumeration(3, groups));
}

TEST_CASE("forward closure of singletons is the power set") {
  const std::vector<VariableSet> groups = {VariableSet(3, {0}), VariableSet(3, {1}),
                                           VariableSet(3, {2})};
  const auto z = forward_closure(3, groups);
  CHECK(z.size() == 8);
  CHECK(z == oracle::closure_by_enumeration(3, groups));
}

TEST_CASE("forward closure of no groups is the empty pattern alone") {
  const auto z = forward_closure(4, {});
  CHECK(z.size() == 1);
  CHECK(z[0] == VariableSet(4));
}

TEST_CASE("forward closure errors") {
  CHECK_THROWS_AS(forward_closure(3, {VariableSet(4, {0})}), std::invalid_argument);
  const std::vector<VariableSet> singletons = {VariableSet(6, {0}), VariableSet(6, {1}),
                                               VariableSet(6, {2}), VariableSet(6, {3}),
                                               VariableSet(6, {4}), VariableSet(6, {5})};
  CHECK_THROWS_AS(forward_closure(6, singletons, 10), SizeLimitError);
}

TEST_CASE("forward closure matches enumeration on random families") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t p = 2 + rng() % 9;
    const auto groups = oracle::random_group_family(p, 6, rng);
    CHECK(forward_closure(p, groups) == oracle::closure_by_enumeration(p, groups));
  }
}

TEST_CASE("complement family") {
  PatternFamily f(2, {VariableSet(2), VariableSet(2, {0, 1})});
  const auto c = complement_family(f);
  CHECK(c == PatternFamily(2, {VariableSet(2, {0, 1}), VariableSet(2)}));
  CHECK(complement_family(c) == f);
  CHECK(complement_family(PatternFamily(3)) == PatternFamily(3));

  const auto z = forward_closure(3, {VariableSet(3, {0, 1}), VariableSet(3, {1, 2})});
  const auto pset = complement_family(z);
  const PatternFamily expected(
      3, {VariableSet::all(3), VariableSet(3, {2}), VariableSet(3, {0}), VariableSet(3)});
  CHECK(pset == expected);
}

TEST_CASE("is_closed") {
  const auto all = oracle::closure_by_enumeration(
      2, {VariableSet(2, {0}), VariableSet(2, {1})});
  CHECK(is_closed(all, ClosureMode::kUnion));
  CHECK(is_closed(all, ClosureMode::kIntersection));

  PatternFamily open(2, {VariableSet(2, {0}), VariableSet(2, {1})});
  CHECK(!is_closed(open, ClosureMode::kUnion));

  // length-2 windows on a 4-sequence: two overlapping windows meet in a
  // singleton that is not itself a window
  PatternFamily windows(4, {VariableSet(4, {0, 1}), VariableSet(4, {1, 2}),
                            VariableSet(4, {2, 3})});
  CHECK(!is_closed(windows, ClosureMode::kIntersection));
}

TEST_CASE("backward minimal groups on small closed families") {
  const auto all01 = oracle::closure_by_enumeration(2, {VariableSet(2, {0}), VariableSet(2, {1})});
  CHECK(sorted(backward_minimal_groups(all01)) ==
        sorted({VariableSet(2, {0}), VariableSet(2, {1})}));

  const auto z = forward_closure(3, {VariableSet(3, {0, 1}), VariableSet(3, {1, 2})});
  CHECK(sorted(backward_minimal_groups(z)) ==
        sorted({VariableSet(3, {0, 1}), VariableSet(3, {1, 2})}));

  PatternFamily single(4, {VariableSet(4), VariableSet(4, {1, 2})});
  CHECK(backward_minimal_groups(single) == std::vector<VariableSet>{VariableSet(4, {1, 2})});

  PatternFamily not_closed(3, {VariableSet(3), VariableSet(3, {0}), VariableSet(3, {1})});
  CHECK_THROWS_AS(backward_minimal_groups(not_closed), std::invalid_argument);
}

TEST_CASE("backward agrees with both atom oracles on random closures") {
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = 2 + rng() % 7;
    const auto groups = oracle::random_group_family(p, 5, rng);
    const auto z = oracle::closure_by_enumeration(p, groups);
    const auto atoms = sorted(backward_minimal_groups(z));
    CHECK(atoms == sorted(oracle::atoms_by_definition(z)));
    if (z.size() <= 12) CHECK(atoms == sorted(oracle::atoms_by_minimal_spanning(z)));
  }
}

TEST_CASE("round trip: forward then backward recovers atoms") {
  std::mt19937_64 rng(303);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = 2 + rng() % 9;
    const auto groups = oracle::random_group_family(p, 6, rng);
    const auto z = forward_closure(p, groups);
    CHECK(sorted(backward_minimal_groups(z)) == sorted(oracle::atoms_by_definition(z)));
  }
}

TEST_CASE("round trip: backward then forward is identity on union-closed input") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = 2 + rng() % 7;
    const auto z = oracle::closure_by_enumeration(p, oracle::random_group_family(p, 6, rng));
    CHECK(forward_closure(p, backward_minimal_groups(z)) == z);
  }

  // exhaustive over p=3: every union-closed family reachable from a
  // subfamily of the 7 nonempty subsets
  std::vector<VariableSet> subsets;
  for (std::size_t mask = 1; mask < 8; ++mask) {
    VariableSet s(3);
    for (std::size_t j = 0; j < 3; ++j)
      if (mask & (std::size_t{1} << j)) s.insert(j);
    subsets.push_back(s);
  }
  std::vector<PatternFamily> families;
  for (std::size_t pick = 0; pick < 128; ++pick) {
    std::vector<VariableSet> gen;
    for (std::size_t k = 0; k < 7; ++k)
      if (pick & (std::size_t{1} << k)) gen.push_back(subsets[k]);
    auto z = oracle::closure_by_enumeration(3, gen);
    if (std::find(families.begin(), families.end(), z) == families.end())
      families.push_back(std::move(z));
  }
  CHECK(families.size() > 10);
  for (const auto& z : families) CHECK(forward_closure(3, backward_minimal_groups(z)) == z);
}

TEST_CASE("hull on sequence groups") {
  const auto sys = sequence_groups(6);
  CHECK(hull(VariableSet(6, {1, 4}), sys) == VariableSet(6, {1, 2, 3, 4}));
  CHECK(hull(VariableSet(6), sys) == VariableSet(6));
  CHECK(hull(VariableSet(6, {2}), sys) == VariableSet(6, {2}));
}

TEST_CASE("hull with singleton groups is identity") {
  std::vector<VariableSet> groups;
  for (std::size_t j = 0; j < 4; ++j) groups.push_back(VariableSet(4, {j}));
  CHECK(hull(VariableSet(4), groups) == VariableSet(4));
  CHECK(hull(VariableSet(4, {1, 3}), groups) == VariableSet(4, {1, 3}));
}

TEST_CASE("hull of opposite grid corners is the full box") {
  const auto sys = grid_groups(3, 3, axis_aligned_thetas());
  VariableSet corners(9);
  corners.insert(grid_index(0, 0, 3));
  corners.insert(grid_index(2, 2, 3));
  CHECK(hull(corners, sys) == VariableSet::all(9));
}

TEST_CASE("hull properties: extensive, idempotent, monotone") {
  std::mt19937_64 rng(505);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = 2 + rng() % 7;
    const auto groups = oracle::random_group_family(p, 6, rng);
    const auto i = oracle::random_subset(p, rng);
    const auto h = hull(i, groups);
    CHECK(i.is_subset_of(h));
    CHECK(hull(h, groups) == h);

    auto i2 = i | oracle::random_subset(p, rng);
    CHECK(h.is_subset_of(hull(i2, groups)));

    // membership characterization: hull(i) = i exactly when i is a nonzero pattern
    const auto pf = complement_family(forward_closure(p, groups));
    CHECK((h == i) == pf.contains(i));
  }
}

TEST_CASE("hasse dag on the power set of two elements") {
  const auto f = oracle::closure_by_enumeration(2, {VariableSet(2, {0}), VariableSet(2, {1})});
  const auto dag = hasse_dag(f);
  CHECK(dag.edges.size() == 4);
  auto has_edge = [&](const VariableSet& a, const VariableSet& b) {
    for (auto [pa, ch] : dag.edges)
      if (dag.nodes[pa] == a && dag.nodes[ch] == b) return true;
    return false;
  };
  CHECK(has_edge(VariableSet(2, {0, 1}), VariableSet(2, {0})));
  CHECK(has_edge(VariableSet(2, {0, 1}), VariableSet(2, {1})));
  CHECK(has_edge(VariableSet(2, {0}), VariableSet(2)));
  CHECK(has_edge(VariableSet(2, {1}), VariableSet(2)));
  CHECK(!has_edge(VariableSet(2, {0, 1}), VariableSet(2)));
}

TEST_CASE("hasse dag trivial families") {
  CHECK(hasse_dag(PatternFamily(3, {VariableSet(3, {1})})).edges.empty());
  const auto chain = hasse_dag(PatternFamily(2, {VariableSet(2), VariableSet(2, {0}),
                                                 VariableSet(2, {0, 1})}));
  CHECK(chain.edges.size() == 2);
}

TEST_CASE("hasse dag equals brute-force transitive reduction") {
  std::mt19937_64 rng(606);
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t p = 2 + rng() % 7;
    const auto z = oracle::closure_by_enumeration(p, oracle::random_group_family(p, 6, rng));
    if (z.size() > 64) continue;
    const auto dag = hasse_dag(z);
    auto expected = oracle::cover_pairs_by_definition(z);
    std::vector<std::pair<VariableSet, VariableSet>> got;
    for (auto [pa, ch] : dag.edges) got.emplace_back(dag.nodes[pa], dag.nodes[ch]);
    auto key = [](const std::pair<VariableSet, VariableSet>& e) {
      return e.first.to_string() + ">" + e.second.to_string();
    };
    auto by_key = [&](const auto& a, const auto& b) { return key(a) < key(b); };
    std::sort(expected.begin(), expected.end(), by_key);
    std::sort(got.begin(), got.end(), by_key);
    CHECK(got == expected);
  }
}

TEST_CASE("direct parents in small families") {
  const auto pset = oracle::closure_by_enumeration(
      3, {VariableSet(3, {0}), VariableSet(3, {1}), VariableSet(3, {2})});
  const auto parents = direct_parents(VariableSet(3), pset);
  CHECK(parents.size() == 3);
  for (const auto& s : parents) CHECK(s.count() == 1);

  CHECK(direct_parents(VariableSet::all(3), pset).empty());
  CHECK_THROWS_AS(direct_parents(VariableSet(3, {0}), PatternFamily(3, {VariableSet(3)})),
                  std::invalid_argument);
}

TEST_CASE("direct parents on the sequence interval family") {
  const auto pf = complement_family(forward_closure(sequence_groups(6)));
  const auto parents = direct_parents(VariableSet(6, {2, 3}), pf);
  CHECK(sorted(parents) == sorted({VariableSet(6, {1, 2, 3}), VariableSet(6, {2, 3, 4})}));
}

TEST_CASE("direct parents match brute-force minimal supersets") {
  std::mt19937_64 rng(707);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t p = 2 + rng() % 7;
    const auto pf =
        complement_family(forward_closure(p, oracle::random_group_family(p, 6, rng)));
    const auto& j = pf[rng() % pf.size()];
    CHECK(sorted(direct_parents(j, pf)) == oracle::minimal_strict_supersets(j, pf));
  }
}

TEST_CASE("complement of a union-closed family is intersection-closed") {
  std::mt19937_64 rng(808);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t p = 2 + rng() % 7;
    const auto z = forward_closure(p, oracle::random_group_family(p, 6, rng));
    CHECK(is_closed(z, ClosureMode::kUnion));
    CHECK(is_closed(complement_family(z), ClosureMode::kIntersection));
  }
}
