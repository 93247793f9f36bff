#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "slasso/group_system.hpp"
#include "slasso/pattern_family.hpp"
#include "slasso/variable_set.hpp"

namespace slasso {

// |Z| can reach 2^p, so closure materialization is capped; exceeding the cap
// is an error, never silent truncation.
class SizeLimitError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultClosureCap = 100000;

// Union-closure of the groups (the zero patterns), always containing the
// empty set. A candidate union Z+G is admitted only when G is not already
// inside Z and no earlier group fits inside Z+G without fitting inside Z, so
// each pattern is generated exactly once; cost O(p |Z| |G|^2).
PatternFamily forward_closure(std::size_t p, const std::vector<VariableSet>& groups,
                              std::size_t cap = kDefaultClosureCap);
PatternFamily forward_closure(const GroupSystem& sys, std::size_t cap = kDefaultClosureCap);

PatternFamily complement_family(const PatternFamily& f);

// Atoms: the unique minimal family whose union-closure reproduces the input.
// Walks the Hasse diagram of the inclusion order by increasing cardinality,
// removing every node equal to the union of its children and rewiring
// children to parents. Validates union-closedness up front.
std::vector<VariableSet> backward_minimal_groups(const PatternFamily& zero_patterns);

enum class ClosureMode { kUnion, kIntersection };

// Pairwise check; pairwise closure implies closure under all finite
// combinations.
bool is_closed(const PatternFamily& f, ClosureMode mode);

// Smallest nonzero pattern containing i: the complement of the union of all
// groups disjoint from i.
VariableSet hull(const VariableSet& i, const std::vector<VariableSet>& groups);
VariableSet hull(const VariableSet& i, const GroupSystem& sys);

PatternDag hasse_dag(const PatternFamily& sets);

// Minimal strict supersets of j within an intersection-closed family.
std::vector<VariableSet> direct_parents(const VariableSet& j, const PatternFamily& family);

}  // namespace slasso
