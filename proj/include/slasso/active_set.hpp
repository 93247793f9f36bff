#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slasso/group_system.hpp"
#include "slasso/solver.hpp"
#include "slasso/variable_set.hpp"

namespace slasso {

// The expansion heuristic found nothing to add: the violating group meets no
// candidate pattern directly or through a fringe neighbour.
class ExpansionStallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Maximal groups among those disjoint from jset: the groups sitting exactly at
// the boundary of the active set. For sequence/grid systems this is at most
// one group per orientation.
std::vector<std::size_t> fringe_groups(const VariableSet& jset, const GroupSystem& sys);

// Direct parents of jset in the DAG of nonzero patterns, i.e. the minimal
// patterns strictly containing it. Each parent is the complement of a maximal
// union of inactive groups; we realize them by anchoring on a variable v
// outside jset and dropping every inactive group containing v.
// Requires jset to be a pattern (hull-equal).
std::vector<VariableSet> direct_parents_structured(const VariableSet& jset,
                                                   const GroupSystem& sys);

// One optimality-condition evaluation. lhs holds one value per candidate
// (parent pattern or fringe group, in the order produced by the helpers
// above); worst is the index of the candidate to expand on when the
// condition fails.
struct ConditionReport {
  bool holds = true;
  std::vector<double> lhs;
  double rhs = 0.0;
  std::size_t worst = VariableSet::npos;
  double worst_lhs = 0.0;
};

// Necessary condition for w (supported on jset, with full-problem gradient
// grad) to be optimal: for every parent pattern K, the gradient energy on
// K\J must be covered by the certificate of the reduced problem.
ConditionReport necessary_condition(const Eigen::VectorXd& w, const VariableSet& jset,
                                    const Eigen::VectorXd& grad, double lambda,
                                    const GroupSystem& sys);

// Sufficient condition: if it holds, the zero-padded w is optimal for the
// full problem up to duality gap eps.
ConditionReport sufficient_condition(const Eigen::VectorXd& w, const VariableSet& jset,
                                     const Eigen::VectorXd& grad, double lambda, double eps,
                                     const GroupSystem& sys);

// Expansion heuristic for a violating fringe group: add every parent pattern
// meeting the group; if none does, go through the fringe neighbours of the
// group instead. The result is re-hulled so it stays a pattern.
VariableSet heuristic_expand(const VariableSet& jset, std::size_t violating_group,
                             const GroupSystem& sys);

enum class ActiveSetPhase { kNecessary, kSufficient, kDone };

struct ActiveSetStep {
  std::size_t step = 0;
  ActiveSetPhase phase = ActiveSetPhase::kNecessary;
  std::size_t active_count = 0;  // |J| after this step's expansion
  double condition_lhs = 0.0;    // worst value of the condition that failed
  double condition_rhs = 0.0;
  double inner_gap = 0.0;        // reduced-problem certificate after re-solving
  std::string expansion;
};

struct ActiveSetResult {
  FitResult fit;
  std::vector<ActiveSetStep> trace;
  ActiveSetPhase phase = ActiveSetPhase::kDone;  // loop the walk stopped in
  bool certified = false;  // sufficient condition validated at eps
  double gap_upper = 0.0;  // bound on the full-problem gap at exit
  std::size_t inclusion_checks = 0;      // parent/new-group inclusion checks done
  std::size_t inclusion_violations = 0;  // stays zero unless the lattice logic breaks
};

// Grows the active set through the pattern DAG: first expand while the
// necessary condition fails, then while the sufficient condition fails,
// re-solving the reduced problem after every expansion. Stops certified, or
// when the variable budget s_max is exhausted (the returned gap bound is
// valid either way).
ActiveSetResult active_set_solve(const Dataset& data, const GroupSystem& sys, double lambda,
                                 double eps, std::size_t s_max, const SolverConfig& cfg);

}  // namespace slasso
