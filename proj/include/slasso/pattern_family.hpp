#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <json.hpp>

#include "slasso/variable_set.hpp"

namespace slasso {

// Deduplicated collection of index sets over a common universe, kept in
// canonical (cardinality, lowest-differing-index) order so iteration and
// serialization are deterministic.
class PatternFamily {
 public:
  PatternFamily() = default;
  explicit PatternFamily(std::size_t universe) : universe_(universe) {}
  PatternFamily(std::size_t universe, std::vector<VariableSet> members);

  std::size_t universe_size() const { return universe_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const VariableSet& operator[](std::size_t k) const { return members_[k]; }
  std::vector<VariableSet>::const_iterator begin() const { return members_.begin(); }
  std::vector<VariableSet>::const_iterator end() const { return members_.end(); }
  const std::vector<VariableSet>& members() const { return members_; }

  bool contains(const VariableSet& s) const;
  void add(const VariableSet& s);  // no-op on duplicates

  bool operator==(const PatternFamily& o) const {
    return universe_ == o.universe_ && members_ == o.members_;
  }
  bool operator!=(const PatternFamily& o) const { return !(*this == o); }

  nlohmann::json to_json() const;
  static PatternFamily from_json(const nlohmann::json& j);

 private:
  std::size_t universe_ = 0;
  std::vector<VariableSet> members_;
};

// Hasse diagram: edges are cover pairs, nodes[parent] strictly contains
// nodes[child] with no family member strictly between.
struct PatternDag {
  PatternFamily nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (parent, child)
  std::vector<std::vector<std::size_t>> children;
  std::vector<std::vector<std::size_t>> parents;
};

}  // namespace slasso
