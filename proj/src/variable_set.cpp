#include "slasso/variable_set.hpp"

#include <iterator>
#include <sstream>
#include <stdexcept>

namespace slasso {

VariableSet::VariableSet(std::size_t universe, std::initializer_list<std::size_t> idx)
    : bits_(universe) {
  for (std::size_t j : idx) insert(j);
}

VariableSet VariableSet::all(std::size_t universe) {
  VariableSet s(universe);
  s.bits_.set();
  return s;
}

VariableSet VariableSet::of(std::size_t universe, const std::vector<std::size_t>& idx) {
  VariableSet s(universe);
  for (std::size_t j : idx) s.insert(j);
  return s;
}

void VariableSet::insert(std::size_t j) {
  if (j >= bits_.size())
    throw std::invalid_argument("VariableSet: index " + std::to_string(j) +
                                " outside universe of size " + std::to_string(bits_.size()));
  bits_.set(j);
}

void VariableSet::erase(std::size_t j) {
  if (j < bits_.size()) bits_.reset(j);
}

void VariableSet::require_same_universe(const VariableSet& o) const {
  if (bits_.size() != o.bits_.size())
    throw std::invalid_argument("VariableSet: universe mismatch (" +
                                std::to_string(bits_.size()) + " vs " +
                                std::to_string(o.bits_.size()) + ")");
}

VariableSet& VariableSet::operator|=(const VariableSet& o) {
  require_same_universe(o);
  bits_ |= o.bits_;
  return *this;
}

VariableSet& VariableSet::operator&=(const VariableSet& o) {
  require_same_universe(o);
  bits_ &= o.bits_;
  return *this;
}

VariableSet& VariableSet::operator-=(const VariableSet& o) {
  require_same_universe(o);
  bits_ -= o.bits_;
  return *this;
}

VariableSet VariableSet::complement() const {
  VariableSet s(*this);
  s.bits_.flip();
  return s;
}

bool VariableSet::is_subset_of(const VariableSet& o) const {
  require_same_universe(o);
  return bits_.is_subset_of(o.bits_);
}

bool VariableSet::is_proper_subset_of(const VariableSet& o) const {
  require_same_universe(o);
  return bits_.is_proper_subset_of(o.bits_);
}

bool VariableSet::intersects(const VariableSet& o) const {
  require_same_universe(o);
  return bits_.intersects(o.bits_);
}

std::vector<std::size_t> VariableSet::members() const {
  std::vector<std::size_t> out;
  out.reserve(bits_.count());
  for (std::size_t j = bits_.find_first(); j != npos; j = bits_.find_next(j)) out.push_back(j);
  return out;
}

std::string VariableSet::to_string() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (std::size_t j = bits_.find_first(); j != npos; j = bits_.find_next(j)) {
    if (!first) os << ',';
    os << j;
    first = false;
  }
  os << '}';
  return os.str();
}

std::size_t VariableSet::hash() const {
  std::vector<std::uint64_t> blocks;
  blocks.reserve(bits_.num_blocks());
  boost::to_block_range(bits_, std::back_inserter(blocks));
  std::size_t h = bits_.size() * 0x9e3779b97f4a7c15ull;
  for (std::uint64_t b : blocks) h = (h ^ b) * 0x100000001b3ull;
  return h;
}

bool VariableSet::canonical_less(const VariableSet& a, const VariableSet& b) {
  a.require_same_universe(b);
  const std::size_t ca = a.count(), cb = b.count();
  if (ca != cb) return ca < cb;
  const auto diff = a.bits_ ^ b.bits_;
  const std::size_t lowest = diff.find_first();
  if (lowest == npos) return false;  // equal sets
  return a.bits_.test(lowest);
}

}  // namespace slasso
