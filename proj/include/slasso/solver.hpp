#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "slasso/group_system.hpp"
#include "slasso/norm.hpp"

namespace slasso {

// Rows are observations. Serialized as CSV with a header row; the first
// column is the response, the remaining columns the design.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(X.cols()); }
};

Dataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const Dataset& data, const std::string& path);

// L(w) = w'Qw/2 - q'w + c with Q = X'X/n, q = X'y/n, c = y'y/2n, so that
// L(w) = ||y - Xw||^2 / 2n. Solvers work on this form; the active set keeps
// X around instead and builds reduced Q blocks on demand.
struct QuadraticLoss {
  Eigen::MatrixXd Q;
  Eigen::VectorXd q;
  double c = 0;

  static QuadraticLoss from_data(const Dataset& data);
  double value(const Eigen::VectorXd& w) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& w) const;
};

struct SolverConfig {
  std::size_t max_iters = 1000;
  double eta_floor_rel = 1e-10;   // keeps the reweighting bounded near zeros
  double w_tol_rel = 1e-8;        // iterate stagnation, relative to ||w||_inf
  double gap_tol = 1e-8;          // duality gap certificate target
  double support_tol_rel = 1e-6;  // |w_j| below this times ||w||_inf reads as zero
  std::size_t dual_exact_limit = 40;  // largest support for exact dual norms in gaps
  double dual_tol = 1e-9;
};

enum class GapKind { kExact, kBound };

struct FitResult {
  Eigen::VectorXd w;
  VariableSet support;
  VariableSet pattern;  // hull of the support; a nonzero pattern of the system
  double objective = 0;
  double gap = 0;
  GapKind gap_kind = GapKind::kBound;
  std::size_t iterations = 0;
  bool converged = false;
};

nlohmann::json fit_result_to_json(const FitResult& fit);

VariableSet thresholded_support(const Eigen::VectorXd& w, std::size_t p, double rel_tol);

// min  ||y - Xw||^2 / 2n + (lambda/2) Omega(w)^2
FitResult solve_lambda_form(const Dataset& data, const GroupSystem& sys, double lambda,
                            const SolverConfig& cfg = {},
                            const Eigen::VectorXd* warm = nullptr);

// min  ||y - Xw||^2 / 2n + mu Omega(w)
FitResult solve_mu_form(const Dataset& data, const GroupSystem& sys, double mu,
                        const SolverConfig& cfg = {}, const Eigen::VectorXd* warm = nullptr);

// Squared-penalty solve restricted to variables in J (w is zero elsewhere,
// and only groups meeting J enter the penalty). w and the warm start are
// full-length.
FitResult solve_lambda_form_reduced(const QuadraticLoss& loss, const GroupSystem& sys,
                                    const VariableSet& j, double lambda,
                                    const SolverConfig& cfg = {},
                                    const Eigen::VectorXd* warm = nullptr);

// Dual-norm bound at w = 0; above this the squared-penalty solution is
// already negligible, which makes it the natural top of a path grid.
double lambda_max_bound(const Dataset& data, const GroupSystem& sys);

struct PathPoint {
  double lambda = 0;
  FitResult fit;
};

std::vector<PathPoint> regularization_path(const Dataset& data, const GroupSystem& sys,
                                           std::size_t num_points = 30,
                                           double lambda_min_ratio = 1e-3,
                                           const SolverConfig& cfg = {});

// Least squares on the listed columns, minimum-norm when the design is rank
// deficient (the flag reports it). Entries off the support come back zero.
Eigen::VectorXd ols_refit(const Dataset& data, const VariableSet& support,
                          bool* rank_deficient = nullptr);

}  // namespace slasso
