#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "slasso/variable_set.hpp"

namespace slasso {

// A group of variables with strictly positive weights supported exactly on
// its members. The weight vector is aligned with members() (ascending index).
class WeightedGroup {
 public:
  WeightedGroup(VariableSet vars, std::vector<double> weights,
                std::optional<double> theta = std::nullopt);
  WeightedGroup(VariableSet vars, double uniform_weight,
                std::optional<double> theta = std::nullopt);

  const VariableSet& vars() const { return vars_; }
  const std::vector<std::size_t>& members() const { return members_; }
  const std::vector<double>& weights() const { return weights_; }
  std::optional<double> theta() const { return theta_; }
  std::size_t size() const { return members_.size(); }

  double weight_of(std::size_t j) const;  // j must be a member

  WeightedGroup with_weights(std::vector<double> weights) const {
    return WeightedGroup(vars_, std::move(weights), theta_);
  }

 private:
  VariableSet vars_;
  std::vector<std::size_t> members_;
  std::vector<double> weights_;
  std::optional<double> theta_;
};

struct SequenceTopology {
  std::size_t l = 0;
};
struct GridTopology {
  std::size_t h = 0, l = 0;
};
struct CustomTopology {};
using Topology = std::variant<CustomTopology, SequenceTopology, GridTopology>;

// Ordered collection of weighted groups over p variables, with a
// per-variable membership cache. Immutable after construction.
class GroupSystem {
 public:
  GroupSystem(std::size_t p, std::vector<WeightedGroup> groups, Topology topology = CustomTopology{});

  std::size_t p() const { return p_; }
  std::size_t group_count() const { return groups_.size(); }
  const std::vector<WeightedGroup>& groups() const { return groups_; }
  const WeightedGroup& group(std::size_t g) const { return groups_[g]; }
  const Topology& topology() const { return topology_; }

  // Distinct orientation angles present, in first-appearance order.
  std::vector<double> orientations() const;

  // Indices of the groups containing variable j.
  const std::vector<std::size_t>& groups_containing(std::size_t j) const;
  bool covers_all_variables() const { return covers_all_; }

  nlohmann::json to_json() const;
  static GroupSystem from_json(const nlohmann::json& j);

 private:
  std::size_t p_;
  std::vector<WeightedGroup> groups_;
  Topology topology_;
  std::vector<std::vector<std::size_t>> membership_;
  bool covers_all_ = false;
};

// Grid cell (column i, row j) lives at variable index i + j*l. Fixed layout,
// used by all serialization.
std::size_t grid_index(std::size_t i, std::size_t j, std::size_t l);

// Interval groups of a length-l sequence: prefixes [0..k] (theta 0, growing
// from the left) and suffixes [k..l-1] (theta pi, growing from the right),
// 2(l-1) groups, unit weights.
GroupSystem sequence_groups(std::size_t l);

// Nested half-plane groups {(i,j) : cos(theta) i + sin(theta) j <= k} per
// orientation, excluding the empty and full-grid half-planes. When tan(theta)
// is an integer (or infinite) the normal is rescaled to the smallest integer
// vector and k sweeps integers exactly; otherwise the real inequality is
// evaluated at integer k and duplicates are dropped.
GroupSystem grid_groups(std::size_t h, std::size_t l, const std::vector<double>& thetas);

inline std::vector<double> axis_aligned_thetas() {
  return {0.0, 1.5707963267948966, 3.141592653589793, -1.5707963267948966};
}

// All eight multiples of pi/4: the axis directions plus the diagonals.
inline std::vector<double> pi_over_four_thetas() {
  return {0.0,
          0.7853981633974483,
          1.5707963267948966,
          2.356194490192345,
          3.141592653589793,
          -2.356194490192345,
          -1.5707963267948966,
          -0.7853981633974483};
}

// One unit-weight group per variable; the norm collapses to the l1 norm and
// every subset of variables is a pattern.
GroupSystem singleton_groups(std::size_t p);

enum class WeightScheme { kW1, kW2, kW3 };

WeightScheme weight_scheme_from_string(const std::string& s);
std::string to_string(WeightScheme s);

// W1: all weights 1. W2: |G|^-2. W3: d^G_j = rho^(number of strict subgroups
// of G containing j). Groups equal to the whole variable set keep their
// weights and never enter the W3 subgroup counts; they are convexity devices
// added via add_full_group with a caller-chosen weight.
GroupSystem assign_weights(const GroupSystem& sys, WeightScheme scheme,
                           std::optional<double> rho = std::nullopt);

// Appends {0..p-1} with uniform weight. Not idempotent; calling twice adds
// two copies.
GroupSystem add_full_group(const GroupSystem& sys, double weight);

// Indices of groups meeting J (the active groups) and of the rest. Inactive
// groups of a hull-closed J lie entirely inside the complement of J.
std::vector<std::size_t> active_groups(const GroupSystem& sys, const VariableSet& j);
std::vector<std::size_t> inactive_groups(const GroupSystem& sys, const VariableSet& j);

}  // namespace slasso
