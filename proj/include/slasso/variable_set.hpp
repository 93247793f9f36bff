#pragma once

#include <boost/dynamic_bitset.hpp>

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace slasso {

// Set of variable indices over a fixed universe {0, ..., p-1}.
// Binary operations require matching universe sizes; mixing capacities is an
// error, never an implicit resize.
class VariableSet {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  VariableSet() = default;
  explicit VariableSet(std::size_t universe) : bits_(universe) {}
  VariableSet(std::size_t universe, std::initializer_list<std::size_t> idx);

  static VariableSet all(std::size_t universe);
  static VariableSet of(std::size_t universe, const std::vector<std::size_t>& idx);

  std::size_t universe_size() const { return bits_.size(); }
  std::size_t count() const { return bits_.count(); }
  bool empty() const { return bits_.none(); }
  bool is_full() const { return bits_.count() == bits_.size(); }

  bool contains(std::size_t j) const { return j < bits_.size() && bits_.test(j); }
  void insert(std::size_t j);
  void erase(std::size_t j);

  VariableSet& operator|=(const VariableSet& o);
  VariableSet& operator&=(const VariableSet& o);
  VariableSet& operator-=(const VariableSet& o);
  VariableSet complement() const;

  friend VariableSet operator|(VariableSet a, const VariableSet& b) { a |= b; return a; }
  friend VariableSet operator&(VariableSet a, const VariableSet& b) { a &= b; return a; }
  friend VariableSet operator-(VariableSet a, const VariableSet& b) { a -= b; return a; }

  bool is_subset_of(const VariableSet& o) const;
  bool is_proper_subset_of(const VariableSet& o) const;
  bool intersects(const VariableSet& o) const;

  bool operator==(const VariableSet& o) const { return bits_ == o.bits_; }
  bool operator!=(const VariableSet& o) const { return bits_ != o.bits_; }

  std::size_t first() const { return bits_.find_first(); }
  std::size_t next(std::size_t j) const { return bits_.find_next(j); }

  std::vector<std::size_t> members() const;
  std::string to_string() const;
  std::size_t hash() const;

  // Deterministic family order: cardinality first, then the set owning the
  // lowest differing index comes first ({0,3} before {1,2}).
  static bool canonical_less(const VariableSet& a, const VariableSet& b);

 private:
  boost::dynamic_bitset<std::uint64_t> bits_;
  void require_same_universe(const VariableSet& o) const;
};

struct VariableSetHash {
  std::size_t operator()(const VariableSet& s) const { return s.hash(); }
};

}  // namespace slasso
