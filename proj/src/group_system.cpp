#include "slasso/group_system.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace slasso {

WeightedGroup::WeightedGroup(VariableSet vars, std::vector<double> weights,
                             std::optional<double> theta)
    : vars_(std::move(vars)), members_(vars_.members()), weights_(std::move(weights)),
      theta_(theta) {
  if (weights_.size() != members_.size())
    throw std::invalid_argument("WeightedGroup: " + std::to_string(weights_.size()) +
                                " weights for " + std::to_string(members_.size()) + " members");
  for (double d : weights_)
    if (!(d > 0.0))
      throw std::invalid_argument("WeightedGroup: weights must be strictly positive");
}

WeightedGroup::WeightedGroup(VariableSet vars, double uniform_weight, std::optional<double> theta)
    : WeightedGroup(vars, std::vector<double>(vars.count(), uniform_weight), theta) {}

double WeightedGroup::weight_of(std::size_t j) const {
  auto it = std::lower_bound(members_.begin(), members_.end(), j);
  if (it == members_.end() || *it != j)
    throw std::invalid_argument("WeightedGroup: variable " + std::to_string(j) +
                                " is not a member");
  return weights_[static_cast<std::size_t>(it - members_.begin())];
}

GroupSystem::GroupSystem(std::size_t p, std::vector<WeightedGroup> groups, Topology topology)
    : p_(p), groups_(std::move(groups)), topology_(topology), membership_(p) {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const auto& G = groups_[g];
    if (G.vars().universe_size() != p_)
      throw std::invalid_argument("GroupSystem: group universe " +
                                  std::to_string(G.vars().universe_size()) +
                                  " does not match p=" + std::to_string(p_));
    if (G.vars().empty())
      throw std::invalid_argument("GroupSystem: empty groups are not allowed");
    for (std::size_t j : G.members()) membership_[j].push_back(g);
  }
  covers_all_ = true;
  for (std::size_t j = 0; j < p_; ++j)
    if (membership_[j].empty()) covers_all_ = false;
}

std::vector<double> GroupSystem::orientations() const {
  std::vector<double> out;
  for (const auto& G : groups_) {
    if (!G.theta()) continue;
    if (std::find(out.begin(), out.end(), *G.theta()) == out.end()) out.push_back(*G.theta());
  }
  return out;
}

const std::vector<std::size_t>& GroupSystem::groups_containing(std::size_t j) const {
  if (j >= p_) throw std::invalid_argument("GroupSystem: variable index out of range");
  return membership_[j];
}

nlohmann::json GroupSystem::to_json() const {
  nlohmann::json out;
  out["p"] = p_;
  nlohmann::json topo;
  if (std::holds_alternative<SequenceTopology>(topology_)) {
    topo["kind"] = "sequence";
    topo["l"] = std::get<SequenceTopology>(topology_).l;
  } else if (std::holds_alternative<GridTopology>(topology_)) {
    const auto& g = std::get<GridTopology>(topology_);
    topo["kind"] = "grid";
    topo["h"] = g.h;
    topo["l"] = g.l;
  } else {
    topo["kind"] = "custom";
  }
  out["topology"] = topo;
  auto arr = nlohmann::json::array();
  for (const auto& G : groups_) {
    nlohmann::json jg;
    jg["vars"] = G.members();
    jg["weights"] = G.weights();
    if (G.theta())
      jg["theta"] = *G.theta();
    else
      jg["theta"] = nullptr;
    arr.push_back(jg);
  }
  out["groups"] = arr;
  return out;
}

GroupSystem GroupSystem::from_json(const nlohmann::json& j) {
  const std::size_t p = j.at("p").get<std::size_t>();
  Topology topo = CustomTopology{};
  if (j.contains("topology")) {
    const auto& t = j.at("topology");
    const std::string kind = t.value("kind", "custom");
    if (kind == "sequence")
      topo = SequenceTopology{t.at("l").get<std::size_t>()};
    else if (kind == "grid")
      topo = GridTopology{t.at("h").get<std::size_t>(), t.at("l").get<std::size_t>()};
  }
  std::vector<WeightedGroup> groups;
  for (const auto& jg : j.at("groups")) {
    auto vars = VariableSet::of(p, jg.at("vars").get<std::vector<std::size_t>>());
    auto weights = jg.at("weights").get<std::vector<double>>();
    std::optional<double> theta;
    if (jg.contains("theta") && !jg.at("theta").is_null()) theta = jg.at("theta").get<double>();
    groups.emplace_back(std::move(vars), std::move(weights), theta);
  }
  return GroupSystem(p, std::move(groups), topo);
}

std::size_t grid_index(std::size_t i, std::size_t j, std::size_t l) { return i + j * l; }

GroupSystem singleton_groups(std::size_t p) {
  if (p == 0) throw std::invalid_argument("singleton_groups: need p >= 1");
  std::vector<WeightedGroup> groups;
  groups.reserve(p);
  for (std::size_t j = 0; j < p; ++j) groups.emplace_back(VariableSet(p, {j}), 1.0);
  return GroupSystem(p, std::move(groups));
}

GroupSystem sequence_groups(std::size_t l) {
  if (l < 2) throw std::invalid_argument("sequence_groups: need l >= 2");
  const double pi = 3.141592653589793;
  std::vector<WeightedGroup> groups;
  for (std::size_t k = 0; k + 2 <= l; ++k) {  // prefixes [0..k]
    VariableSet v(l);
    for (std::size_t j = 0; j <= k; ++j) v.insert(j);
    groups.emplace_back(std::move(v), 1.0, 0.0);
  }
  for (std::size_t k = 1; k < l; ++k) {  // suffixes [k..l-1]
    VariableSet v(l);
    for (std::size_t j = k; j < l; ++j) v.insert(j);
    groups.emplace_back(std::move(v), 1.0, pi);
  }
  return GroupSystem(l, std::move(groups), SequenceTopology{l});
}

namespace {

// Half-plane sweep for one orientation. Nested by construction: growing k
// only adds cells.
std::vector<VariableSet> half_plane_chain(std::size_t h, std::size_t l, double theta) {
  const std::size_t p = h * l;
  const double c = std::cos(theta), s = std::sin(theta);

  // Integer-tangent orientations get an exact integer normal so that every
  // distinct half-plane shows up (cos/sin roundoff would otherwise skip
  // levels); e.g. pi/4 -> (1,1), pi -> (-1,0), -pi/2 -> (0,-1).
  double nx = c, ny = s;
  const double eps = 1e-9;
  auto near_int = [&](double x) { return std::abs(x - std::round(x)) < eps; };
  if (std::abs(c) < eps) {
    nx = 0.0;
    ny = (s > 0 ? 1.0 : -1.0);
  } else if (near_int(s / c)) {
    const double t = std::round(s / c);
    const double sign = (c > 0 ? 1.0 : -1.0);
    nx = sign;
    ny = sign * t;
  }

  std::vector<double> level(p);
  double lo = 0, hi = 0;
  for (std::size_t j = 0; j < h; ++j)
    for (std::size_t i = 0; i < l; ++i) {
      const double v = nx * static_cast<double>(i) + ny * static_cast<double>(j);
      level[grid_index(i, j, l)] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }

  std::vector<VariableSet> chain;
  const long k_lo = static_cast<long>(std::floor(lo)) - 1;
  const long k_hi = static_cast<long>(std::ceil(hi)) + 1;
  for (long k = k_lo; k <= k_hi; ++k) {
    VariableSet g(p);
    for (std::size_t idx = 0; idx < p; ++idx)
      if (level[idx] <= static_cast<double>(k) + eps) g.insert(idx);
    if (g.empty() || g.is_full()) continue;
    if (chain.empty() || chain.back() != g) chain.push_back(g);
  }
  return chain;
}

}  // namespace

GroupSystem grid_groups(std::size_t h, std::size_t l, const std::vector<double>& thetas) {
  if (h < 2 || l < 2) throw std::invalid_argument("grid_groups: need h >= 2 and l >= 2");
  if (thetas.empty()) throw std::invalid_argument("grid_groups: need at least one orientation");
  const double pi = 3.141592653589793;
  for (double t : thetas)
    if (!(t > -pi - 1e-12 && t <= pi + 1e-12))
      throw std::invalid_argument("grid_groups: orientations must lie in (-pi, pi]");

  std::vector<WeightedGroup> groups;
  for (double theta : thetas)
    for (auto& g : half_plane_chain(h, l, theta)) groups.emplace_back(std::move(g), 1.0, theta);
  return GroupSystem(h * l, std::move(groups), GridTopology{h, l});
}

WeightScheme weight_scheme_from_string(const std::string& s) {
  if (s == "W1" || s == "w1") return WeightScheme::kW1;
  if (s == "W2" || s == "w2") return WeightScheme::kW2;
  if (s == "W3" || s == "w3") return WeightScheme::kW3;
  throw std::invalid_argument("unknown weight scheme: " + s);
}

std::string to_string(WeightScheme s) {
  switch (s) {
    case WeightScheme::kW1: return "W1";
    case WeightScheme::kW2: return "W2";
    case WeightScheme::kW3: return "W3";
  }
  return "?";
}

GroupSystem assign_weights(const GroupSystem& sys, WeightScheme scheme,
                           std::optional<double> rho) {
  if (scheme == WeightScheme::kW3) {
    if (!rho) throw std::invalid_argument("assign_weights: W3 requires rho");
    if (!(*rho > 0.0 && *rho < 1.0))
      throw std::invalid_argument("assign_weights: rho must lie in (0, 1)");
  }

  std::vector<WeightedGroup> out;
  out.reserve(sys.group_count());
  for (std::size_t g = 0; g < sys.group_count(); ++g) {
    const auto& G = sys.group(g);
    if (G.vars().is_full()) {  // caller-weighted convexity device, left alone
      out.push_back(G);
      continue;
    }
    std::vector<double> w(G.size());
    switch (scheme) {
      case WeightScheme::kW1:
        std::fill(w.begin(), w.end(), 1.0);
        break;
      case WeightScheme::kW2: {
        const double d = 1.0 / (static_cast<double>(G.size()) * static_cast<double>(G.size()));
        std::fill(w.begin(), w.end(), d);
        break;
      }
      case WeightScheme::kW3: {
        for (std::size_t k = 0; k < G.members().size(); ++k) {
          const std::size_t j = G.members()[k];
          std::size_t nested = 0;
          for (std::size_t hIdx : sys.groups_containing(j)) {
            const auto& H = sys.group(hIdx);
            if (hIdx == g || H.vars().is_full()) continue;
            if (H.vars().is_proper_subset_of(G.vars())) ++nested;
          }
          w[k] = std::pow(*rho, static_cast<double>(nested));
        }
        break;
      }
    }
    out.push_back(G.with_weights(std::move(w)));
  }
  return GroupSystem(sys.p(), std::move(out), sys.topology());
}

GroupSystem add_full_group(const GroupSystem& sys, double weight) {
  if (!(weight > 0.0)) throw std::invalid_argument("add_full_group: weight must be positive");
  auto groups = sys.groups();
  groups.emplace_back(VariableSet::all(sys.p()), weight);
  return GroupSystem(sys.p(), std::move(groups), sys.topology());
}

std::vector<std::size_t> active_groups(const GroupSystem& sys, const VariableSet& j) {
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < sys.group_count(); ++g)
    if (sys.group(g).vars().intersects(j)) out.push_back(g);
  return out;
}

std::vector<std::size_t> inactive_groups(const GroupSystem& sys, const VariableSet& j) {
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < sys.group_count(); ++g)
    if (!sys.group(g).vars().intersects(j)) out.push_back(g);
  return out;
}

}  // namespace slasso
