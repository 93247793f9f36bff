#include "slasso/pattern_algebra.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

namespace slasso {

PatternFamily forward_closure(std::size_t p, const std::vector<VariableSet>& groups,
                              std::size_t cap) {
  if (cap < 1) throw std::invalid_argument("forward_closure: cap must be >= 1");
  for (const auto& g : groups)
    if (g.universe_size() != p)
      throw std::invalid_argument("forward_closure: group capacity " +
                                  std::to_string(g.universe_size()) + " does not match p=" +
                                  std::to_string(p));

  std::vector<VariableSet> zs;
  zs.emplace_back(p);  // the empty pattern
  std::unordered_set<VariableSet, VariableSetHash> seen(zs.begin(), zs.end());

  for (std::size_t m = 0; m < groups.size(); ++m) {
    const VariableSet& G = groups[m];
    std::vector<VariableSet> fresh;
    for (const VariableSet& Z : zs) {
      if (G.is_subset_of(Z)) continue;
      VariableSet U = Z | G;
      bool admit = true;
      for (std::size_t l = 0; l < m; ++l) {
        if (groups[l].is_subset_of(U) && !groups[l].is_subset_of(Z)) {
          admit = false;
          break;
        }
      }
      if (!admit || !seen.insert(U).second) continue;
      fresh.push_back(std::move(U));
      if (zs.size() + fresh.size() > cap)
        throw SizeLimitError("forward_closure: family exceeded cap of " + std::to_string(cap) +
                             " while absorbing group " + std::to_string(m) + " (" +
                             G.to_string() + ")");
    }
    zs.insert(zs.end(), std::make_move_iterator(fresh.begin()),
              std::make_move_iterator(fresh.end()));
  }
  return PatternFamily(p, std::move(zs));
}

PatternFamily forward_closure(const GroupSystem& sys, std::size_t cap) {
  std::vector<VariableSet> groups;
  groups.reserve(sys.group_count());
  for (const auto& G : sys.groups()) groups.push_back(G.vars());
  return forward_closure(sys.p(), groups, cap);
}

PatternFamily complement_family(const PatternFamily& f) {
  std::vector<VariableSet> out;
  out.reserve(f.size());
  for (const auto& m : f) out.push_back(m.complement());
  return PatternFamily(f.universe_size(), std::move(out));
}

bool is_closed(const PatternFamily& f, ClosureMode mode) {
  for (std::size_t a = 0; a < f.size(); ++a)
    for (std::size_t b = a + 1; b < f.size(); ++b) {
      const VariableSet c =
          mode == ClosureMode::kUnion ? (f[a] | f[b]) : (f[a] & f[b]);
      if (!f.contains(c)) return false;
    }
  return true;
}

std::vector<VariableSet> backward_minimal_groups(const PatternFamily& zero_patterns) {
  if (!is_closed(zero_patterns, ClosureMode::kUnion))
    throw std::invalid_argument("backward_minimal_groups: input family is not union-closed");
  if (zero_patterns.empty()) return {};

  PatternDag dag = hasse_dag(zero_patterns);
  const std::size_t n = dag.nodes.size();
  std::vector<std::set<std::size_t>> children(n), parents(n);
  for (auto [pa, ch] : dag.edges) {
    children[pa].insert(ch);
    parents[ch].insert(pa);
  }

  // Canonical node order is cardinality-ascending, which is exactly the
  // sweep order the removal rule needs.
  std::vector<bool> alive(n, true);
  for (std::size_t g = 0; g < n; ++g) {
    VariableSet u(zero_patterns.universe_size());
    for (std::size_t c : children[g]) u |= dag.nodes[c];
    if (u != dag.nodes[g]) continue;

    for (std::size_t c : children[g]) parents[c].erase(g);
    for (std::size_t pa : parents[g]) children[pa].erase(g);
    if (!parents[g].empty()) {
      for (std::size_t pa : parents[g])
        for (std::size_t c : children[g]) {
          children[pa].insert(c);
          parents[c].insert(pa);
        }
    }
    alive[g] = false;
  }

  std::vector<VariableSet> atoms;
  for (std::size_t g = 0; g < n; ++g)
    if (alive[g]) atoms.push_back(dag.nodes[g]);
  return atoms;
}

VariableSet hull(const VariableSet& i, const std::vector<VariableSet>& groups) {
  VariableSet u(i.universe_size());
  for (const auto& g : groups) {
    if (g.universe_size() != i.universe_size())
      throw std::invalid_argument("hull: group capacity mismatch");
    if (!g.intersects(i)) u |= g;
  }
  return u.complement();
}

VariableSet hull(const VariableSet& i, const GroupSystem& sys) {
  if (i.universe_size() != sys.p())
    throw std::invalid_argument("hull: index set capacity does not match system p");
  VariableSet u(sys.p());
  for (const auto& g : sys.groups())
    if (!g.vars().intersects(i)) u |= g.vars();
  return u.complement();
}

PatternDag hasse_dag(const PatternFamily& sets) {
  PatternDag dag;
  dag.nodes = sets;
  const std::size_t n = sets.size();
  dag.children.assign(n, {});
  dag.parents.assign(n, {});

  // Nodes are cardinality-ascending. For each node, scan smaller nodes from
  // largest to smallest: a strict subset is a cover child iff it is not
  // inside an already-accepted child.
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t bi = a; bi-- > 0;) {
      if (sets[bi].count() >= sets[a].count()) continue;
      if (!sets[bi].is_proper_subset_of(sets[a])) continue;
      bool covered = false;
      for (std::size_t c : dag.children[a])
        if (sets[bi].is_subset_of(sets[c])) {
          covered = true;
          break;
        }
      if (covered) continue;
      dag.children[a].push_back(bi);
      dag.parents[bi].push_back(a);
      dag.edges.emplace_back(a, bi);
    }
  }
  return dag;
}

std::vector<VariableSet> direct_parents(const VariableSet& j, const PatternFamily& family) {
  if (!family.contains(j))
    throw std::invalid_argument("direct_parents: " + j.to_string() +
                                " is not a member of the family");
  std::vector<VariableSet> supers;
  for (const auto& f : family)
    if (j.is_proper_subset_of(f)) supers.push_back(f);
  std::sort(supers.begin(), supers.end(), VariableSet::canonical_less);

  std::vector<VariableSet> minimal;
  for (const auto& s : supers) {
    bool dominated = false;
    for (const auto& m : minimal)
      if (m.is_subset_of(s)) {
        dominated = true;
        break;
      }
    if (!dominated) minimal.push_back(s);
  }
  return minimal;
}

}  // namespace slasso
