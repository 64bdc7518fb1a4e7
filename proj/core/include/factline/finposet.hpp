#pragma once

#include <factline/rational.hpp>

#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace factline {

struct PosetError : std::runtime_error {
  explicit PosetError(const std::string& what) : std::runtime_error(what) {}
};
struct IncoherentDiagram : std::runtime_error {
  explicit IncoherentDiagram(const std::string& what) : std::runtime_error(what) {}
};
struct NotContained : std::runtime_error {
  explicit NotContained(const std::string& what) : std::runtime_error(what) {}
};
struct BadConfiguration : std::runtime_error {
  explicit BadConfiguration(const std::string& what) : std::runtime_error(what) {}
};

// Finite poset on elements 0..n-1. Relation matrix validated on construction:
// reflexive, antisymmetric, transitive.
class FinPoset {
 public:
  // Builds the reflexive-transitive closure of the given relations, then validates
  // antisymmetry.
  FinPoset(int n, const std::vector<std::pair<int, int>>& relations);

  int size() const { return n_; }
  bool leq(int a, int b) const { return leq_[static_cast<std::size_t>(a) * n_ + b] != 0; }

  // Covering pairs (p, q): p < q with nothing strictly between.
  const std::vector<std::pair<int, int>>& hasse() const { return hasse_; }

  bool directed() const;    // every pair has an upper bound
  bool codirected() const;  // every pair has a lower bound
  bool has_terminal() const;
  bool has_initial() const;

  // 1-categorical finality of the inclusion of s: for every q, the slice
  // {x in s | q <= x} is nonempty and connected under comparability.
  bool is_final_inclusion(const std::vector<int>& s) const;

 private:
  int n_;
  std::vector<char> leq_;
  std::vector<std::pair<int, int>> hasse_;
};

// Set-valued diagram on a finite poset. Fibers are {0..size-1}; one transport per
// Hasse covering pair. Construction validates that all composite transports along
// Hasse paths between the same endpoints agree.
struct SetDiagram {
  FinPoset base;
  std::vector<int> fiber_size;
  std::map<std::pair<int, int>, std::vector<int>> transport;  // keyed by Hasse pair

  SetDiagram(FinPoset base_, std::vector<int> fiber_size_,
             std::map<std::pair<int, int>, std::vector<int>> transport_);

  // Composite transport along any Hasse path p -> q (p <= q required).
  std::vector<int> composite(int p, int q) const;
};

struct SetColimit {
  int size = 0;
  // cocone[p][x] = class of element x of fiber p, in 0..size-1; classes numbered
  // by first appearance in fiber-major order (deterministic).
  std::vector<std::vector<int>> cocone;
};

SetColimit set_colimit(const SetDiagram& d);

// Closed interval [lo, hi], lo <= hi (points allowed).
struct ClosedInterval {
  Rat lo, hi;
};

// Disjoint closed rational intervals, sorted, non-touching.
class CompactSet {
 public:
  explicit CompactSet(std::vector<ClosedInterval> components);
  const std::vector<ClosedInterval>& components() const { return comps_; }
  int component_count() const { return static_cast<int>(comps_.size()); }

 private:
  std::vector<ClosedInterval> comps_;
};

struct Pi0Delta {
  int count = 0;
  std::vector<int> map;  // empty when no codomain given
  bool is_pi0_equivalence = false;
};

// Component count of k; with k2, the induced map pi0(k) -> pi0(k2) and whether it
// is a bijection. Throws NotContained if some component of k misses every
// component of k2.
Pi0Delta pi0_delta(const CompactSet& k, const std::optional<CompactSet>& k2);

// Directedness probe for the poset of compact (n+1)-component sets avoiding the
// point configuration s (one point per complementary gap): any two samples must
// admit a common coarsening by componentwise hulls that still avoids s with one
// point per gap. Throws BadConfiguration if a sample violates the gap condition.
bool weiss_localization_probe(const std::vector<Rat>& s, const std::vector<CompactSet>& samples);

}  // namespace factline
