#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slasso/group_system.hpp"
#include "slasso/variable_set.hpp"

namespace slasso {

// Some active group norm sits below the smoothing floor; the caller must
// shrink J or smooth before evaluating.
class DegeneratePointError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double lower, double upper)
      : std::runtime_error(what), lower_(lower), upper_(upper) {}
  double lower() const { return lower_; }
  double upper() const { return upper_; }

 private:
  double lower_, upper_;
};

struct NormContext {
  explicit NormContext(const GroupSystem& system, double floor = 1e-12)
      : sys(&system), smoothing_floor(floor) {
    if (!(floor > 0.0)) throw std::invalid_argument("NormContext: smoothing floor must be > 0");
  }
  const GroupSystem* sys;
  double smoothing_floor;

  // Omega is a norm only when every variable is covered; it is a seminorm
  // otherwise and can vanish on nonzero vectors.
  bool is_norm() const { return sys->covers_all_variables(); }
};

enum class DualKind { kExact, kUpperBound };

struct DualNormEstimate {
  double value = 0.0;
  DualKind kind = DualKind::kUpperBound;
  std::size_t iterations = 0;
  double tolerance = 0.0;
  double lower = 0.0;  // certified bracket around the true dual norm
  double upper = 0.0;
};

// Omega(w) = sum over groups of ||d^G o w||_2.
double omega(const Eigen::VectorXd& w, const NormContext& ctx);

// Omega_J: the same sum evaluated on the zero-padded vector; only groups
// meeting J contribute. w_j is aligned with j.members().
double omega_reduced(const Eigen::VectorXd& w_j, const VariableSet& j, const NormContext& ctx);

// r_k = sum over active groups containing k of (d^G_k)^2 w_k / ||d^G o w||_2,
// for k in J; aligned with j.members(). w is the full p-vector.
Eigen::VectorXd r_vector(const Eigen::VectorXd& w, const VariableSet& j, const NormContext& ctx);

// Closed-form dual bound: plugs the infinity-relaxation minimizer
// xi^G_k = -u_k / sum_{H containing k} d^H_k into the conic dual, giving
// max_G sqrt( sum_{k in G and I} (u_k / D_k)^2 ) with D_k the weight-sum over
// groups meeting I that contain k. Always >= the exact dual norm.
DualNormEstimate dual_norm_upper_bound(const Eigen::VectorXd& u, const VariableSet& i,
                                       const NormContext& ctx);

// Exact dual norm of the reduced norm Omega_I, to relative tolerance tol.
// Maximizes u^T v - Omega(v)^2/2 by alternating closed-form updates (every
// simplex-feasible eta certifies a lower bound) while feasible points of the
// conic dual, rebalanced across groups, certify upper bounds; stops when the
// bracket closes. Desk-scale guard: |I| <= 200.
DualNormEstimate dual_norm_exact(const Eigen::VectorXd& u, const VariableSet& i,
                                 const NormContext& ctx, double tol = 1e-9,
                                 std::size_t max_iters = 20000);

// Same machinery over an explicit subset of the system's groups, masked to I.
// This is what the inactive-group norm dual (consistency check, sufficient
// condition) evaluates: its groups are the inactive ones, not G_I.
DualNormEstimate dual_norm_bound_over(const Eigen::VectorXd& u, const VariableSet& i,
                                      const std::vector<std::size_t>& group_idx,
                                      const NormContext& ctx);
DualNormEstimate dual_norm_exact_over(const Eigen::VectorXd& u, const VariableSet& i,
                                      const std::vector<std::size_t>& group_idx,
                                      const NormContext& ctx, double tol = 1e-9,
                                      std::size_t max_iters = 20000);

// Dual of a norm splitting over a two-block partition: the max of the two
// block duals. Requires a, b to partition the universe and every group to
// live inside one block. Test oracle for block-disjoint systems.
double dual_norm_disjoint(const Eigen::VectorXd& u, const VariableSet& a, const VariableSet& b,
                          const NormContext& ctx, double tol = 1e-10);

}  // namespace slasso
