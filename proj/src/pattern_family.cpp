#include "slasso/pattern_family.hpp"

#include <algorithm>
#include <stdexcept>

namespace slasso {

PatternFamily::PatternFamily(std::size_t universe, std::vector<VariableSet> members)
    : universe_(universe), members_(std::move(members)) {
  for (const auto& m : members_) {
    if (m.universe_size() != universe_)
      throw std::invalid_argument("PatternFamily: member universe " +
                                  std::to_string(m.universe_size()) +
                                  " does not match family universe " + std::to_string(universe_));
  }
  std::sort(members_.begin(), members_.end(), VariableSet::canonical_less);
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

bool PatternFamily::contains(const VariableSet& s) const {
  auto it = std::lower_bound(members_.begin(), members_.end(), s, VariableSet::canonical_less);
  return it != members_.end() && *it == s;
}

void PatternFamily::add(const VariableSet& s) {
  if (s.universe_size() != universe_)
    throw std::invalid_argument("PatternFamily::add: universe mismatch");
  auto it = std::lower_bound(members_.begin(), members_.end(), s, VariableSet::canonical_less);
  if (it != members_.end() && *it == s) return;
  members_.insert(it, s);
}

nlohmann::json PatternFamily::to_json() const {
  nlohmann::json out;
  out["p"] = universe_;
  auto patterns = nlohmann::json::array();
  for (const auto& m : members_) patterns.push_back(m.members());
  out["patterns"] = patterns;
  return out;
}

PatternFamily PatternFamily::from_json(const nlohmann::json& j) {
  const std::size_t p = j.at("p").get<std::size_t>();
  std::vector<VariableSet> members;
  for (const auto& lst : j.at("patterns"))
    members.push_back(VariableSet::of(p, lst.get<std::vector<std::size_t>>()));
  return PatternFamily(p, std::move(members));
}

}  // namespace slasso
