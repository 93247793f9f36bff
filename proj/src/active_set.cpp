#include "slasso/active_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "slasso/norm.hpp"
#include "slasso/pattern_algebra.hpp"

namespace slasso {

namespace {

// Pick the failing candidate to expand on: largest violation first, ties by
// fewest new variables, then canonical set order, so runs are reproducible.
struct WorstTracker {
  std::size_t idx = VariableSet::npos;
  double lhs = -std::numeric_limits<double>::infinity();
  VariableSet diff;

  void offer(std::size_t i, double value, const VariableSet& d) {
    if (idx == VariableSet::npos || value > lhs) {
      idx = i;
      lhs = value;
      diff = d;
      return;
    }
    if (value == lhs) {
      if (d.count() < diff.count() ||
          (d.count() == diff.count() && VariableSet::canonical_less(d, diff))) {
        idx = i;
        diff = d;
      }
    }
  }
};

std::string set_label(const VariableSet& s) { return s.to_string(); }

}  // namespace

std::vector<std::size_t> fringe_groups(const VariableSet& jset, const GroupSystem& sys) {
  const std::vector<std::size_t> inactive = inactive_groups(sys, jset);
  std::vector<std::size_t> fringe;
  for (std::size_t a : inactive) {
    bool maximal = true;
    for (std::size_t b : inactive) {
      if (a == b) continue;
      if (sys.group(a).vars().is_subset_of(sys.group(b).vars()) &&
          sys.group(a).vars() != sys.group(b).vars()) {
        maximal = false;
        break;
      }
    }
    if (maximal) fringe.push_back(a);
  }
  return fringe;
}

std::vector<VariableSet> direct_parents_structured(const VariableSet& jset,
                                                   const GroupSystem& sys) {
  if (jset.universe_size() != sys.p())
    throw std::invalid_argument("direct parents: index set capacity mismatch");
  if (hull(jset, sys) != jset)
    throw std::invalid_argument("direct parents: " + jset.to_string() +
                                " is not a nonzero pattern of the system");

  const std::vector<std::size_t> inactive = inactive_groups(sys, jset);
  // Candidate parent anchored at v: complement of the union of inactive
  // groups avoiding v. Every pattern strictly containing jset contains one of
  // these, so the minimal candidates are exactly the direct parents.
  std::vector<VariableSet> candidates;
  const VariableSet outside = jset.complement();
  for (std::size_t v = outside.first(); v != VariableSet::npos; v = outside.next(v)) {
    VariableSet uni(sys.p());
    for (std::size_t g : inactive)
      if (!sys.group(g).vars().contains(v)) uni |= sys.group(g).vars();
    VariableSet cand = uni.complement();
    if (std::find(candidates.begin(), candidates.end(), cand) == candidates.end())
      candidates.push_back(std::move(cand));
  }
  std::vector<VariableSet> parents;
  for (const auto& a : candidates) {
    bool minimal = true;
    for (const auto& b : candidates)
      if (b != a && b.is_subset_of(a)) {
        minimal = false;
        break;
      }
    if (minimal) parents.push_back(a);
  }
  std::sort(parents.begin(), parents.end(), VariableSet::canonical_less);
  return parents;
}

namespace {

ConditionReport necessary_condition_impl(const Eigen::VectorXd& w, const VariableSet& jset,
                                         const std::vector<VariableSet>& parents,
                                         const Eigen::VectorXd& grad, double lambda,
                                         const GroupSystem& sys) {
  ConditionReport rep;
  rep.rhs = std::sqrt(std::max(0.0, -lambda * w.dot(grad)));
  rep.lhs.reserve(parents.size());
  WorstTracker worst;
  for (std::size_t i = 0; i < parents.size(); ++i) {
    const VariableSet diff = parents[i] - jset;
    double energy = 0;
    for (std::size_t j = diff.first(); j != VariableSet::npos; j = diff.next(j))
      energy += grad[static_cast<Eigen::Index>(j)] * grad[static_cast<Eigen::Index>(j)];
    double denom = 0;
    for (std::size_t g = 0; g < sys.group_count(); ++g) {
      const auto& G = sys.group(g);
      if (!G.vars().intersects(parents[i]) || G.vars().intersects(jset)) continue;
      double dmax = 0;
      const auto& mem = G.members();
      for (std::size_t k = 0; k < mem.size(); ++k)
        if (diff.contains(mem[k])) dmax = std::max(dmax, G.weights()[k]);
      denom += dmax;
    }
    if (denom <= 0)
      throw std::logic_error("necessary condition: parent " + parents[i].to_string() +
                             " brings no new group; the pattern lattice is inconsistent");
    const double value = std::sqrt(energy) / denom;
    rep.lhs.push_back(value);
    worst.offer(i, value, diff);
  }
  rep.worst = worst.idx;
  rep.worst_lhs = rep.worst == VariableSet::npos ? 0.0 : worst.lhs;
  rep.holds = rep.worst_lhs <= rep.rhs;
  return rep;
}

ConditionReport sufficient_condition_impl(const Eigen::VectorXd& w, const VariableSet& jset,
                                          const std::vector<std::size_t>& fringe,
                                          const Eigen::VectorXd& grad, double lambda,
                                          double eps, const GroupSystem& sys) {
  ConditionReport rep;
  rep.rhs = std::sqrt(std::max(0.0, lambda * (2.0 * eps - w.dot(grad))));
  const std::vector<std::size_t> inactive = inactive_groups(sys, jset);
  std::vector<double> dsum(sys.p(), 0.0);
  for (std::size_t g : inactive) {
    const auto& G = sys.group(g);
    const auto& mem = G.members();
    for (std::size_t k = 0; k < mem.size(); ++k) dsum[mem[k]] += G.weights()[k];
  }
  rep.lhs.reserve(fringe.size());
  WorstTracker worst;
  for (std::size_t i = 0; i < fringe.size(); ++i) {
    const auto& G = sys.group(fringe[i]);
    double energy = 0;
    for (std::size_t j : G.members()) {
      if (dsum[j] <= 0)
        throw std::invalid_argument(
            "sufficient condition: variable " + std::to_string(j) +
            " of a fringe group is covered by no inactive group");
      const double t = grad[static_cast<Eigen::Index>(j)] / dsum[j];
      energy += t * t;
    }
    const double value = std::sqrt(energy);
    rep.lhs.push_back(value);
    worst.offer(i, value, G.vars());
  }
  rep.worst = worst.idx;
  rep.worst_lhs = rep.worst == VariableSet::npos ? 0.0 : worst.lhs;
  rep.holds = rep.worst_lhs <= rep.rhs;
  return rep;
}

VariableSet heuristic_expand_impl(const VariableSet& jset, std::size_t violating_group,
                                  const std::vector<VariableSet>& parents,
                                  const std::vector<std::size_t>& fringe,
                                  const GroupSystem& sys) {
  const VariableSet& gvars = sys.group(violating_group).vars();
  VariableSet grown = jset;
  bool touched = false;
  for (const auto& K : parents)
    if (K.intersects(gvars)) {
      grown |= K;
      touched = true;
    }
  if (!touched) {
    // The violating group misses every candidate pattern; reach them through
    // the fringe neighbours it overlaps (the group itself already failed).
    for (std::size_t h : fringe) {
      if (h == violating_group) continue;
      const VariableSet& hvars = sys.group(h).vars();
      if (!hvars.intersects(gvars)) continue;
      for (const auto& K : parents)
        if (K.intersects(hvars)) grown |= K;
    }
  }
  if (grown == jset)
    throw ExpansionStallError("active set expansion stalled: group " +
                              set_label(gvars) +
                              " meets no candidate pattern, directly or through a "
                              "fringe neighbour");
  return hull(grown, sys);
}

}  // namespace

ConditionReport necessary_condition(const Eigen::VectorXd& w, const VariableSet& jset,
                                    const Eigen::VectorXd& grad, double lambda,
                                    const GroupSystem& sys) {
  return necessary_condition_impl(w, jset, direct_parents_structured(jset, sys), grad,
                                  lambda, sys);
}

ConditionReport sufficient_condition(const Eigen::VectorXd& w, const VariableSet& jset,
                                     const Eigen::VectorXd& grad, double lambda, double eps,
                                     const GroupSystem& sys) {
  return sufficient_condition_impl(w, jset, fringe_groups(jset, sys), grad, lambda, eps,
                                   sys);
}

VariableSet heuristic_expand(const VariableSet& jset, std::size_t violating_group,
                             const GroupSystem& sys) {
  return heuristic_expand_impl(jset, violating_group, direct_parents_structured(jset, sys),
                               fringe_groups(jset, sys), sys);
}

ActiveSetResult active_set_solve(const Dataset& data, const GroupSystem& sys, double lambda,
                                 double eps, std::size_t s_max, const SolverConfig& cfg) {
  if (lambda <= 0) throw std::invalid_argument("active set solve: lambda must be positive");
  if (eps < 0) throw std::invalid_argument("active set solve: eps must be nonnegative");
  if (s_max > sys.p())
    throw std::invalid_argument("active set solve: s_max exceeds the number of variables");
  if (data.p() != sys.p())
    throw std::invalid_argument("active set solve: data and groups disagree on p");
  if (!sys.covers_all_variables())
    throw std::invalid_argument(
        "active set solve: every variable must be covered by some group");

  const QuadraticLoss loss = QuadraticLoss::from_data(data);
  SolverConfig inner = cfg;
  inner.gap_tol = eps / 10.0;  // outer certificate dominates the error budget

  ActiveSetResult res;
  VariableSet jset(sys.p());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.p()));
  double inner_gap = 0.0;
  std::size_t total_iters = 0;

  const auto check_inclusions = [&](const std::vector<VariableSet>& parents) {
    for (const auto& K : parents) {
      const VariableSet diff = K - jset;
      for (std::size_t g = 0; g < sys.group_count(); ++g) {
        const auto& gv = sys.group(g).vars();
        if (!gv.intersects(K) || gv.intersects(jset)) continue;
        ++res.inclusion_checks;
        if (!diff.is_subset_of(gv)) ++res.inclusion_violations;
      }
    }
  };

  const auto resolve = [&]() {
    const FitResult fit =
        solve_lambda_form_reduced(loss, sys, jset, lambda, inner, &w);
    w = fit.w;
    inner_gap = fit.gap;
    total_iters += fit.iterations;
  };

  std::size_t step = 0;
  Eigen::VectorXd grad = loss.grad(w);

  // Phase 1: grow while the necessary condition fails.
  res.phase = ActiveSetPhase::kNecessary;
  bool n_satisfied = false;
  while (jset.count() <= s_max) {
    const auto parents = direct_parents_structured(jset, sys);
    check_inclusions(parents);
    const ConditionReport rep = necessary_condition_impl(w, jset, parents, grad, lambda, sys);
    if (rep.holds) {
      n_satisfied = true;
      break;
    }
    const VariableSet& chosen = parents[rep.worst];
    jset = chosen;
    resolve();
    grad = loss.grad(w);
    ActiveSetStep rec;
    rec.step = step++;
    rec.phase = ActiveSetPhase::kNecessary;
    rec.active_count = jset.count();
    rec.condition_lhs = rep.worst_lhs;
    rec.condition_rhs = rep.rhs;
    rec.inner_gap = inner_gap;
    rec.expansion = "parent " + set_label(chosen);
    res.trace.push_back(std::move(rec));
  }

  // Phase 2: grow while the sufficient condition fails.
  if (n_satisfied) res.phase = ActiveSetPhase::kSufficient;
  ConditionReport srep;
  while (res.phase == ActiveSetPhase::kSufficient && jset.count() <= s_max) {
    const auto fringe = fringe_groups(jset, sys);
    srep = sufficient_condition_impl(w, jset, fringe, grad, lambda, eps, sys);
    if (srep.holds) {
      res.phase = ActiveSetPhase::kDone;
      res.certified = true;
      break;
    }
    const std::size_t gid = fringe[srep.worst];
    const auto parents = direct_parents_structured(jset, sys);
    check_inclusions(parents);
    const VariableSet grown = heuristic_expand_impl(jset, gid, parents, fringe, sys);
    jset = grown;
    resolve();
    grad = loss.grad(w);
    ActiveSetStep rec;
    rec.step = step++;
    rec.phase = ActiveSetPhase::kSufficient;
    rec.active_count = jset.count();
    rec.condition_lhs = srep.worst_lhs;
    rec.condition_rhs = srep.rhs;
    rec.inner_gap = inner_gap;
    rec.expansion = "group " + set_label(sys.group(gid).vars());
    res.trace.push_back(std::move(rec));
  }
  if (res.phase == ActiveSetPhase::kSufficient) {
    // budget exhausted inside the sufficient loop; evaluate once more so the
    // exit certificate reflects the final iterate
    srep = sufficient_condition(w, jset, grad, lambda, eps, sys);
    if (srep.holds) {
      res.phase = ActiveSetPhase::kDone;
      res.certified = true;
    }
  } else if (!res.certified) {
    srep = sufficient_condition(w, jset, grad, lambda, eps, sys);
    res.certified = srep.holds;
    if (res.certified) res.phase = ActiveSetPhase::kDone;
  }

  // Exit certificate for the full problem: the dual norm of the full
  // gradient is at most the larger of the active-side dual norm and the
  // inactive-side bound the sufficient condition already computed.
  const NormContext ctx(sys);
  const Eigen::VectorXd kappa = -grad;
  double uj = 0;
  GapKind kind = GapKind::kBound;
  if (!jset.empty()) {
    const auto act = active_groups(sys, jset);
    Eigen::VectorXd masked = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.p()));
    for (std::size_t j = jset.first(); j != VariableSet::npos; j = jset.next(j))
      masked[static_cast<Eigen::Index>(j)] = kappa[static_cast<Eigen::Index>(j)];
    if (jset.count() <= cfg.dual_exact_limit) {
      try {
        uj = dual_norm_exact_over(masked, jset, act, ctx, cfg.dual_tol).upper;
        if (jset.is_full()) kind = GapKind::kExact;
      } catch (const ConvergenceError& e) {
        uj = e.upper();
      }
    } else {
      uj = dual_norm_bound_over(masked, jset, act, ctx).value;
    }
  }
  const double u_full = std::max(uj, srep.worst_lhs);
  const double om = omega(w, ctx);
  res.gap_upper =
      std::max(0.0, 0.5 * lambda * om * om + 0.5 / lambda * u_full * u_full - w.dot(kappa));

  res.fit.w = w;
  res.fit.support = thresholded_support(w, sys.p(), cfg.support_tol_rel);
  res.fit.pattern = hull(res.fit.support, sys);
  res.fit.objective = loss.value(w) + 0.5 * lambda * om * om;
  res.fit.gap = res.gap_upper;
  res.fit.gap_kind = kind;
  res.fit.iterations = total_iters;
  res.fit.converged = res.certified;
  return res;
}

}  // namespace slasso
