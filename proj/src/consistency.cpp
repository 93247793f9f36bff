#include "slasso/consistency.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "slasso/pattern_algebra.hpp"

namespace slasso {

namespace {

// Exact dual norms stay affordable up to this many outside variables; larger
// problems fall back to the closed-form bound.
constexpr std::size_t kExactDualLimit = 200;

VariableSet exact_support(const Eigen::VectorXd& w) {
  VariableSet s(static_cast<std::size_t>(w.size()));
  for (Eigen::Index j = 0; j < w.size(); ++j)
    if (w[j] != 0.0) s.insert(static_cast<std::size_t>(j));
  return s;
}

}  // namespace

std::string to_string(ConsistencyVerdict v) {
  switch (v) {
    case ConsistencyVerdict::kConsistent: return "consistent";
    case ConsistencyVerdict::kInconsistent: return "inconsistent";
    case ConsistencyVerdict::kIndeterminate: return "indeterminate";
  }
  return "indeterminate";
}

nlohmann::json ConsistencyReport::to_json() const {
  nlohmann::json j;
  j["hull"] = hull.members();
  j["r_hull"] = std::vector<double>(r_hull.data(), r_hull.data() + r_hull.size());
  j["condition_value"] = condition_value;
  j["value_kind"] = value_kind == DualKind::kExact ? "exact" : "upper_bound";
  j["value_lower"] = value_lower;
  j["value_upper"] = value_upper;
  j["threshold_margin"] = threshold_margin;
  j["verdict"] = to_string(verdict);
  j["kappa"] = kappa;
  j["nu"] = nu;
  return j;
}

std::pair<VariableSet, Eigen::VectorXd> population_r(const Eigen::VectorXd& w_true,
                                                     const GroupSystem& sys) {
  if (static_cast<std::size_t>(w_true.size()) != sys.p())
    throw std::invalid_argument("population_r: loading vector has wrong length");
  if (w_true.lpNorm<Eigen::Infinity>() == 0.0)
    throw std::invalid_argument("population_r: the true loading vector is zero");

  const VariableSet jset = hull(exact_support(w_true), sys);
  const NormContext ctx(sys);
  return {jset, r_vector(w_true, jset, ctx)};
}

ConsistencyReport check_consistency(const Eigen::MatrixXd& Q, const Eigen::VectorXd& w_true,
                                    const GroupSystem& sys,
                                    std::optional<double> dual_tol) {
  const std::size_t p = sys.p();
  if (Q.rows() != Q.cols() || static_cast<std::size_t>(Q.rows()) != p)
    throw std::invalid_argument("check_consistency: Q must be p x p");
  const double scale = Q.lpNorm<Eigen::Infinity>();
  if ((Q - Q.transpose()).lpNorm<Eigen::Infinity>() > 1e-10 * std::max(1.0, scale))
    throw std::invalid_argument("check_consistency: Q must be symmetric");

  ConsistencyReport rep;
  auto [jset, rj] = population_r(w_true, sys);
  rep.hull = jset;
  rep.r_hull = std::move(rj);

  rep.nu = 0.0;
  for (Eigen::Index j = 0; j < w_true.size(); ++j)
    if (w_true[j] != 0.0) {
      const double a = std::abs(w_true[j]);
      rep.nu = rep.nu == 0.0 ? a : std::min(rep.nu, a);
    }

  const auto mem = rep.hull.members();
  Eigen::MatrixXd qjj(mem.size(), mem.size());
  for (std::size_t a = 0; a < mem.size(); ++a)
    for (std::size_t b = 0; b < mem.size(); ++b)
      qjj(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          Q(static_cast<Eigen::Index>(mem[a]), static_cast<Eigen::Index>(mem[b]));

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(qjj);
  rep.kappa = eig.eigenvalues().minCoeff();
  if (!(rep.kappa > 0.0))
    throw std::invalid_argument("check_consistency: Q restricted to the hull is singular");

  const Eigen::VectorXd zj = qjj.ldlt().solve(rep.r_hull);

  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  const VariableSet outside = rep.hull.complement();
  for (std::size_t j = outside.first(); j != VariableSet::npos; j = outside.next(j)) {
    double s = 0;
    for (std::size_t a = 0; a < mem.size(); ++a)
      s += Q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(mem[a])) *
           zj[static_cast<Eigen::Index>(a)];
    v[static_cast<Eigen::Index>(j)] = s;
  }

  const NormContext ctx(sys);
  if (outside.empty() || v.lpNorm<Eigen::Infinity>() == 0.0) {
    rep.condition_value = 0.0;
    rep.value_kind = DualKind::kExact;
    rep.value_lower = 0.0;
    rep.value_upper = 0.0;
  } else {
    const auto inactive = inactive_groups(sys, rep.hull);
    if (dual_tol && outside.count() <= kExactDualLimit) {
      try {
        const auto est = dual_norm_exact_over(v, outside, inactive, ctx, *dual_tol);
        rep.condition_value = est.value;
        rep.value_kind = est.kind;
        rep.value_lower = est.lower;
        rep.value_upper = est.upper;
      } catch (const ConvergenceError& e) {
        rep.condition_value = e.upper();
        rep.value_kind = DualKind::kUpperBound;
        rep.value_lower = e.lower();
        rep.value_upper = e.upper();
      }
    } else {
      const auto est = dual_norm_bound_over(v, outside, inactive, ctx);
      rep.condition_value = est.value;
      rep.value_kind = DualKind::kUpperBound;
      rep.value_lower = 0.0;
      rep.value_upper = est.value;
    }
  }

  rep.threshold_margin = 1.0 - rep.condition_value;
  if (rep.value_upper < 1.0)
    rep.verdict = ConsistencyVerdict::kConsistent;
  else if (rep.value_lower > 1.0)
    rep.verdict = ConsistencyVerdict::kInconsistent;
  else
    rep.verdict = ConsistencyVerdict::kIndeterminate;
  return rep;
}

std::vector<RecoveryPoint> empirical_hull_recovery(std::uint64_t seed, const GroupSystem& sys,
                                                   const RecoverySpec& spec,
                                                   std::size_t trials,
                                                   const SolverConfig& cfg) {
  if (trials < 1) throw std::invalid_argument("empirical_hull_recovery: trials must be >= 1");
  if (spec.sample_sizes.empty())
    throw std::invalid_argument("empirical_hull_recovery: no sample sizes given");
  if (!(spec.mu_scale > 0.0))
    throw std::invalid_argument("empirical_hull_recovery: mu_scale must be positive");
  if (spec.noise_sd < 0.0)
    throw std::invalid_argument("empirical_hull_recovery: negative noise level");
  const std::size_t p = sys.p();
  if (static_cast<std::size_t>(spec.w_true.size()) != p || spec.Q.rows() != spec.Q.cols() ||
      static_cast<std::size_t>(spec.Q.rows()) != p)
    throw std::invalid_argument("empirical_hull_recovery: dimension mismatch");

  const Eigen::LLT<Eigen::MatrixXd> llt(spec.Q);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("empirical_hull_recovery: Q is not positive definite");
  const Eigen::MatrixXd root = llt.matrixL();

  const VariableSet target = hull(exact_support(spec.w_true), sys);

  std::vector<RecoveryPoint> out;
  for (const std::size_t n : spec.sample_sizes) {
    RecoveryPoint pt;
    pt.n = n;
    pt.mu = spec.mu_scale * std::pow(static_cast<double>(n), -0.25);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      // one generator per (n, trial) cell keeps trials independent of order
      std::seed_seq ss{seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(t)};
      std::mt19937_64 rng(ss);
      std::normal_distribution<double> gauss;

      Dataset data;
      data.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
      Eigen::VectorXd g(static_cast<Eigen::Index>(p));
      for (std::size_t i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < g.size(); ++j) g[j] = gauss(rng);
        data.X.row(static_cast<Eigen::Index>(i)) = (root * g).transpose();
      }
      data.y = data.X * spec.w_true;
      for (Eigen::Index i = 0; i < data.y.size(); ++i)
        data.y[i] += spec.noise_sd * gauss(rng);

      const FitResult fit = solve_mu_form(data, sys, pt.mu, cfg);
      if (fit.pattern == target) ++hits;
    }
    pt.frequency = static_cast<double>(hits) / static_cast<double>(trials);
    out.push_back(pt);
  }
  return out;
}

}  // namespace slasso
