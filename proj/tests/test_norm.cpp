#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "slasso/norm.hpp"
#include "slasso/pattern_algebra.hpp"

using namespace slasso;

namespace {

GroupSystem singleton_system(std::size_t p) {
  std::vector<WeightedGroup> groups;
  for (std::size_t j = 0; j < p; ++j) groups.emplace_back(VariableSet(p, {j}), 1.0);
  return GroupSystem(p, std::move(groups));
}

GroupSystem overlap_chain_system() {
  std::vector<WeightedGroup> groups;
  groups.emplace_back(VariableSet(3, {0, 1}), 1.0);
  groups.emplace_back(VariableSet(3, {1, 2}), 1.0);
  return GroupSystem(3, std::move(groups));
}

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index k = 0;
  for (double x : vals) v[k++] = x;
  return v;
}

GroupSystem random_system(std::size_t p, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> ngroups(1, 5);
  std::uniform_real_distribution<double> wdist(0.2, 2.0);
  std::bernoulli_distribution coin(0.45);
  std::vector<WeightedGroup> groups;
  const std::size_t m = ngroups(rng);
  while (groups.size() < m) {
    VariableSet v(p);
    for (std::size_t j = 0; j < p; ++j)
      if (coin(rng)) v.insert(j);
    if (v.empty()) continue;
    std::vector<double> w(v.count());
    for (auto& x : w) x = wdist(rng);
    groups.emplace_back(std::move(v), std::move(w));
  }
  // cover every variable so omega is a proper norm
  for (std::size_t j = 0; j < p; ++j) {
    bool covered = false;
    for (const auto& g : groups)
      if (g.vars().contains(j)) covered = true;
    if (!covered) groups.emplace_back(VariableSet(p, {j}), wdist(rng));
  }
  return GroupSystem(p, std::move(groups));
}

// Lower estimate of the dual norm: direction sampling followed by randomized
// hill climbing on the ratio u^T v / Omega(v). Only trustworthy in low
// dimension.
double dual_by_search(const Eigen::VectorXd& u, const NormContext& ctx, std::mt19937_64& rng,
                      int samples) {
  std::normal_distribution<double> gauss;
  const auto p = u.size();
  auto ratio = [&](const Eigen::VectorXd& v) {
    const double om = omega(v, ctx);
    return om > 0 ? std::abs(u.dot(v)) / om : 0.0;
  };
  double best = 0;
  Eigen::VectorXd arg = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
    e[j] = 1.0;
    const double r = ratio(e);
    if (r > best) {
      best = r;
      arg = e;
    }
  }
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd v(p);
    for (Eigen::Index j = 0; j < p; ++j) v[j] = gauss(rng);
    const double r = ratio(v);
    if (r > best) {
      best = r;
      arg = v / v.norm();
    }
  }
  for (double sigma = 0.3; sigma > 1e-8; sigma *= 0.5) {
    for (int s = 0; s < 400; ++s) {
      Eigen::VectorXd v = arg;
      for (Eigen::Index j = 0; j < p; ++j) v[j] += sigma * gauss(rng);
      const double r = ratio(v);
      if (r > best) {
        best = r;
        arg = v / v.norm();
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("omega reduces to l1 and l2 in the degenerate systems") {
  const auto l1 = singleton_system(2);
  CHECK(omega(vec({3, -4}), NormContext(l1)) == doctest::Approx(7.0));

  std::vector<WeightedGroup> one;
  one.emplace_back(VariableSet::all(2), 1.0);
  const GroupSystem l2(2, std::move(one));
  CHECK(omega(vec({3, -4}), NormContext(l2)) == doctest::Approx(5.0));

  CHECK(omega(vec({1, 1, 1}), NormContext(overlap_chain_system())) ==
        doctest::Approx(2.0 * std::sqrt(2.0)));

  CHECK_THROWS_AS(omega(vec({1, 2}), NormContext(overlap_chain_system())),
                  std::invalid_argument);
}

TEST_CASE("omega triangle inequality and homogeneity") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t p = 2 + rng() % 49;
    const auto sys = random_system(p, rng);
    const NormContext ctx(sys);
    Eigen::VectorXd a(static_cast<Eigen::Index>(p)), b(static_cast<Eigen::Index>(p));
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      a[j] = gauss(rng);
      b[j] = gauss(rng);
    }
    const double oa = omega(a, ctx), ob = omega(b, ctx);
    CHECK(omega(a + b, ctx) <= oa + ob + 1e-9 * (oa + ob));
    const double t = gauss(rng);
    CHECK(omega(t * a, ctx) == doctest::Approx(std::abs(t) * oa));
    CHECK(oa >= 0);
  }
}

TEST_CASE("omega is only a seminorm without full coverage") {
  std::vector<WeightedGroup> groups;
  groups.emplace_back(VariableSet(3, {0, 1}), 1.0);
  const GroupSystem sys(3, std::move(groups));
  const NormContext ctx(sys);
  CHECK(!ctx.is_norm());
  CHECK(omega(vec({0, 0, 5}), ctx) == 0.0);
  CHECK(NormContext(singleton_system(2)).is_norm());
}

TEST_CASE("omega_reduced on the sequence example") {
  const auto sys = sequence_groups(4);
  const NormContext ctx(sys);
  const VariableSet j(4, {1, 2});
  CHECK(omega_reduced(vec({1, 1}), j, ctx) == doctest::Approx(2.0 + 2.0 * std::sqrt(2.0)));
  CHECK(omega_reduced(Eigen::VectorXd(), VariableSet(4), ctx) == 0.0);

  // equals omega of the zero-padded vector
  CHECK(omega_reduced(vec({1, 1}), j, ctx) == doctest::Approx(omega(vec({0, 1, 1, 0}), ctx)));
  CHECK(omega_reduced(vec({3, -2, 1, 5}), VariableSet::all(4), ctx) ==
        doctest::Approx(omega(vec({3, -2, 1, 5}), ctx)));
}

TEST_CASE("r_vector closed forms") {
  const auto l1 = singleton_system(2);
  const auto r1 = r_vector(vec({2, -3}), VariableSet::all(2), NormContext(l1));
  CHECK(r1[0] == doctest::Approx(1.0));
  CHECK(r1[1] == doctest::Approx(-1.0));

  std::vector<WeightedGroup> one;
  one.emplace_back(VariableSet::all(2), 1.0);
  const GroupSystem l2(2, std::move(one));
  const auto r2 = r_vector(vec({3, 4}), VariableSet::all(2), NormContext(l2));
  CHECK(r2[0] == doctest::Approx(0.6));
  CHECK(r2[1] == doctest::Approx(0.8));

  const auto r3 = r_vector(vec({1, 1, 1}), VariableSet::all(3), NormContext(overlap_chain_system()));
  CHECK(r3[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(r3[1] == doctest::Approx(2.0 / std::sqrt(2.0)));
  CHECK(r3[2] == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("r_vector rejects degenerate points") {
  const auto sys = overlap_chain_system();
  // group {1,2} intersects J={0,1} but w vanishes on it
  CHECK_THROWS_AS(r_vector(vec({1, 0, 0}), VariableSet(3, {0, 1}), NormContext(sys)),
                  DegeneratePointError);
}

TEST_CASE("r_vector Fenchel identity on random group systems") {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t p = 2 + rng() % 9;
    const auto sys = random_system(p, rng);
    const NormContext ctx(sys);
    VariableSet j(p);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    for (std::size_t k = 0; k < p; ++k)
      if (rng() % 2) {
        j.insert(k);
        double x = gauss(rng);
        while (std::abs(x) < 1e-3) x = gauss(rng);
        w[static_cast<Eigen::Index>(k)] = x;
      }
    if (j.empty()) continue;
    const auto r = r_vector(w, j, ctx);
    double dot = 0;
    const auto mem = j.members();
    for (std::size_t k = 0; k < mem.size(); ++k)
      dot += w[static_cast<Eigen::Index>(mem[k])] * r[static_cast<Eigen::Index>(k)];

    Eigen::VectorXd wj(static_cast<Eigen::Index>(mem.size()));
    for (std::size_t k = 0; k < mem.size(); ++k)
      wj[static_cast<Eigen::Index>(k)] = w[static_cast<Eigen::Index>(mem[k])];
    CHECK(dot == doctest::Approx(omega_reduced(wj, j, ctx)).epsilon(1e-9));
  }
}

TEST_CASE("dual norm upper bound closed forms") {
  const auto l1 = singleton_system(2);
  CHECK(dual_norm_upper_bound(vec({3, -1}), VariableSet::all(2), NormContext(l1)).value ==
        doctest::Approx(3.0));

  std::vector<WeightedGroup> one;
  one.emplace_back(VariableSet::all(2), 1.0);
  const GroupSystem l2(2, std::move(one));
  CHECK(dual_norm_upper_bound(vec({3, 4}), VariableSet::all(2), NormContext(l2)).value ==
        doctest::Approx(5.0));

  // denominators (1, 2, 1)
  const auto est = dual_norm_upper_bound(vec({1, 1, 1}), VariableSet::all(3),
                                         NormContext(overlap_chain_system()));
  CHECK(est.value == doctest::Approx(std::sqrt(1.25)));
  CHECK(est.kind == DualKind::kUpperBound);

  std::vector<WeightedGroup> partial;
  partial.emplace_back(VariableSet(3, {0, 1}), 1.0);
  const GroupSystem uncov(3, std::move(partial));
  CHECK_THROWS_AS(dual_norm_upper_bound(vec({1, 1, 1}), VariableSet::all(3), NormContext(uncov)),
                  std::invalid_argument);
}

TEST_CASE("dual norm exact on instant-collapse systems") {
  const auto l1 = singleton_system(2);
  const auto e1 = dual_norm_exact(vec({3, -1}), VariableSet::all(2), NormContext(l1), 1e-10);
  CHECK(e1.value == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(e1.kind == DualKind::kExact);

  const auto zero = dual_norm_exact(vec({0, 0}), VariableSet::all(2), NormContext(l1));
  CHECK(zero.value == 0.0);

  // unit-weight partition: dual is the max block l2 norm
  std::vector<WeightedGroup> part;
  part.emplace_back(VariableSet(5, {0, 1}), 1.0);
  part.emplace_back(VariableSet(5, {2, 3}), 1.0);
  part.emplace_back(VariableSet(5, {4}), 1.0);
  const GroupSystem psys(5, std::move(part));
  const auto ep = dual_norm_exact(vec({3, 4, 1, -1, 2}), VariableSet::all(5), NormContext(psys),
                                  1e-10);
  CHECK(ep.value == doctest::Approx(5.0).epsilon(1e-10));
}

TEST_CASE("dual norm exact on the overlapping chain") {
  // stationarity of (v1, v2, v1) under both group norms gives sqrt(5)/2
  const auto est = dual_norm_exact(vec({1, 1, 1}), VariableSet::all(3),
                                   NormContext(overlap_chain_system()), 1e-9);
  CHECK(est.value == doctest::Approx(std::sqrt(5.0) / 2.0).epsilon(1e-7));
  CHECK(est.lower <= est.value);
  CHECK(est.value <= est.upper);
  CHECK(est.upper - est.lower <= 1e-9 * est.upper * (1 + 1e-9));
}

TEST_CASE("dual norm exact errors") {
  const auto sys = overlap_chain_system();
  CHECK_THROWS_AS(dual_norm_exact(vec({1, 1, 1}), VariableSet::all(3), NormContext(sys), 1e-9, 0),
                  ConvergenceError);
  try {
    dual_norm_exact(vec({1, 1, 1}), VariableSet::all(3), NormContext(sys), 1e-9, 0);
  } catch (const ConvergenceError& e) {
    CHECK(e.lower() > 1.0);
    CHECK(e.upper() <= std::sqrt(1.25) + 1e-12);
  }

  std::vector<WeightedGroup> big;
  big.emplace_back(VariableSet::all(300), 1.0);
  const GroupSystem bigsys(300, std::move(big));
  CHECK_THROWS_AS(dual_norm_exact(Eigen::VectorXd::Ones(300), VariableSet::all(300),
                                  NormContext(bigsys)),
                  std::invalid_argument);
}

TEST_CASE("upper bound dominates exact and search dominates neither") {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t p = 2 + rng() % 3;
    const auto sys = random_system(p, rng);
    const NormContext ctx(sys);
    Eigen::VectorXd u(static_cast<Eigen::Index>(p));
    for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = gauss(rng);

    const auto exact = dual_norm_exact(u, VariableSet::all(p), ctx, 1e-9);
    const auto bound = dual_norm_upper_bound(u, VariableSet::all(p), ctx);
    CHECK(bound.value >= exact.value - 1e-9 * bound.value);

    const double search = dual_by_search(u, ctx, rng, 4000);
    CHECK(exact.value >= search - 1e-6 * std::max(1.0, search));
    CHECK(exact.value <= search * 1.01 + 1e-9);
  }
}

TEST_CASE("generalized Cauchy-Schwarz") {
  std::mt19937_64 rng(44);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t p = 2 + rng() % 7;
    const auto sys = random_system(p, rng);
    const NormContext ctx(sys);
    Eigen::VectorXd u(static_cast<Eigen::Index>(p)), w(static_cast<Eigen::Index>(p));
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      u[j] = gauss(rng);
      w[j] = gauss(rng);
    }
    const auto exact = dual_norm_exact(u, VariableSet::all(p), ctx, 1e-9);
    CHECK(std::abs(u.dot(w)) <= exact.value * omega(w, ctx) * (1 + 1e-8) + 1e-12);
  }
}

TEST_CASE("dual norm over explicit group subsets") {
  // dual over only the first group ignores u outside it
  const auto sys = overlap_chain_system();
  const NormContext ctx(sys);
  const auto est = dual_norm_exact_over(vec({3, 4, 0}), VariableSet(3, {0, 1}), {0}, ctx, 1e-10);
  CHECK(est.value == doctest::Approx(5.0).epsilon(1e-9));

  CHECK_THROWS_AS(dual_norm_exact_over(vec({0, 0, 1}), VariableSet(3, {2}), {0}, ctx, 1e-10),
                  std::invalid_argument);
}

TEST_CASE("disjoint-block dual is the max of block duals") {
  std::vector<WeightedGroup> groups;
  groups.emplace_back(VariableSet(3, {0, 1}), 1.0);
  groups.emplace_back(VariableSet(3, {2}), 1.0);
  const GroupSystem sys(3, std::move(groups));
  const NormContext ctx(sys);
  const VariableSet a(3, {0, 1}), b(3, {2});

  CHECK(dual_norm_disjoint(vec({3, 4, 1}), a, b, ctx) == doctest::Approx(5.0));
  CHECK(dual_norm_disjoint(vec({0, 0, 2}), a, b, ctx) == doctest::Approx(2.0));
  CHECK(dual_norm_disjoint(vec({3, 4, 1}), a, b, ctx) ==
        doctest::Approx(dual_norm_exact(vec({3, 4, 1}), VariableSet::all(3), ctx, 1e-10).value)
            .epsilon(1e-8));

  CHECK_THROWS_AS(dual_norm_disjoint(vec({1, 1, 1}), a, VariableSet(3, {1, 2}), ctx),
                  std::invalid_argument);
  const auto overlap_sys = overlap_chain_system();
  const NormContext overlap_ctx(overlap_sys);
  CHECK_THROWS_AS(dual_norm_disjoint(vec({1, 1, 1}), a, b, overlap_ctx), std::invalid_argument);
}

TEST_CASE("disjoint oracle matches exact on random two-block systems") {
  std::mt19937_64 rng(55);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t pa = 1 + rng() % 4, pb = 1 + rng() % 4, p = pa + pb;
    VariableSet a(p), b(p);
    for (std::size_t j = 0; j < pa; ++j) a.insert(j);
    for (std::size_t j = pa; j < p; ++j) b.insert(j);

    std::mt19937_64 sub(rng());
    std::vector<WeightedGroup> groups;
    auto add_block = [&](const VariableSet& block) {
      std::uniform_real_distribution<double> wdist(0.3, 1.7);
      const auto mem = block.members();
      for (std::size_t rep = 0; rep < 2; ++rep) {
        VariableSet v(p);
        for (std::size_t j : mem)
          if (sub() % 2) v.insert(j);
        if (v.empty()) v.insert(mem[sub() % mem.size()]);
        std::vector<double> w(v.count());
        for (auto& x : w) x = wdist(sub);
        groups.emplace_back(std::move(v), std::move(w));
      }
      for (std::size_t j : mem) {
        bool covered = false;
        for (const auto& g : groups)
          if (g.vars().contains(j)) covered = true;
        if (!covered) groups.emplace_back(VariableSet(p, {j}), 1.0);
      }
    };
    add_block(a);
    add_block(b);
    const GroupSystem sys(p, std::move(groups));
    const NormContext ctx(sys);

    Eigen::VectorXd u(static_cast<Eigen::Index>(p));
    for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = gauss(rng);
    const double split = dual_norm_disjoint(u, a, b, ctx, 1e-10);
    const double exact = dual_norm_exact(u, VariableSet::all(p), ctx, 1e-9).value;
    CHECK(split == doctest::Approx(exact).epsilon(1e-7));
  }
}
