#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "slasso/group_system.hpp"
#include "slasso/norm.hpp"
#include "slasso/solver.hpp"
#include "slasso/variable_set.hpp"

namespace slasso {

enum class ConsistencyVerdict { kConsistent, kInconsistent, kIndeterminate };

std::string to_string(ConsistencyVerdict v);

// Population-level check of hull recovery: the dual norm of the inactive-side
// correlation response must stay below one. The verdict follows the certified
// bracket, never the point estimate: consistent needs upper < 1, inconsistent
// needs lower > 1, anything else is indeterminate.
struct ConsistencyReport {
  VariableSet hull;        // hull of the support of the true loadings
  Eigen::VectorXd r_hull;  // scaled sign vector on the hull, aligned with hull members
  double condition_value = 0.0;
  DualKind value_kind = DualKind::kUpperBound;
  double value_lower = 0.0;  // certified bracket behind the verdict
  double value_upper = 0.0;
  double threshold_margin = 0.0;  // 1 - condition_value; positive slack drives recovery
  ConsistencyVerdict verdict = ConsistencyVerdict::kIndeterminate;
  double kappa = 0.0;  // smallest eigenvalue of the hull block of Q
  double nu = 0.0;     // smallest nonzero |w_j|

  nlohmann::json to_json() const;
};

// Hull of the support of w_true together with the r-vector on it:
// r_j = w_j * sum over active groups containing j of (d^G_j)^2 / ||d^G o w||.
// For singleton groups this is the sign vector, for a unit-weight partition
// the per-block normalization w_G / ||w_G||.
std::pair<VariableSet, Eigen::VectorXd> population_r(const Eigen::VectorXd& w_true,
                                                     const GroupSystem& sys);

// Evaluates the dual norm of Q_{J^c J} Q_{JJ}^{-1} r_J under the norm built
// from the groups outside the hull. dual_tol set: exact evaluation at desk
// scale (falls back to the closed-form bound beyond it, reported in
// value_kind); dual_tol empty: bound only.
ConsistencyReport check_consistency(const Eigen::MatrixXd& Q, const Eigen::VectorXd& w_true,
                                    const GroupSystem& sys,
                                    std::optional<double> dual_tol = 1e-10);

// Monte Carlo companion: draw rows from N(0, Q), fit at mu_n shrinking like
// n^(-1/4), count exact hull recoveries.
struct RecoverySpec {
  Eigen::VectorXd w_true;
  Eigen::MatrixXd Q;  // population covariance of the design
  double noise_sd = 1.0;
  std::vector<std::size_t> sample_sizes;
  double mu_scale = 1.0;  // mu_n = mu_scale * n^(-1/4)
};

struct RecoveryPoint {
  std::size_t n = 0;
  double mu = 0.0;
  double frequency = 0.0;  // fraction of trials recovering the hull exactly
};

std::vector<RecoveryPoint> empirical_hull_recovery(std::uint64_t seed, const GroupSystem& sys,
                                                   const RecoverySpec& spec,
                                                   std::size_t trials,
                                                   const SolverConfig& cfg = {});

}  // namespace slasso
