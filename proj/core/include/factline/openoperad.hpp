#pragma once

#include <factline/finposet.hpp>
#include <factline/stratline.hpp>

#include <array>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace factline {

struct InvalidComposite : std::runtime_error {
  explicit InvalidComposite(const std::string& what) : std::runtime_error(what) {}
};
struct BlockNotInUniverse : std::runtime_error {
  explicit BlockNotInUniverse(const std::string& what) : std::runtime_error(what) {}
};
struct ComplementNotInUniverse : std::runtime_error {
  explicit ComplementNotInUniverse(const std::string& what) : std::runtime_error(what) {}
};

// Finite tuple of opens on one space; the basepoint index is implicit.
struct OTuple {
  std::vector<OpenSet> opens;
};
bool operator==(const OTuple& a, const OTuple& b);
bool operator!=(const OTuple& a, const OTuple& b);

// Pointed map of tuples: map[i] is the destination index of source slot i,
// or -1 for the basepoint. Valid iff within each destination slot the fiber
// opens are pairwise disjoint and contained in that slot's open.
struct OMorphism {
  OTuple src;
  OTuple dst;
  std::vector<int> map;
};
bool operator==(const OMorphism& a, const OMorphism& b);
bool operator!=(const OMorphism& a, const OMorphism& b);

// Validates opens and the fiber invariant; throws InvalidComposite.
OMorphism make_morphism(const StratSpace& space, OTuple src, OTuple dst,
                        std::vector<int> map);
OMorphism identity_morphism(const StratSpace& space, OTuple objects);
// Throws InvalidComposite unless f.dst == g.src.
OMorphism compose(const StratSpace& space, const OMorphism& g, const OMorphism& f);

// Active: nothing is sent to the basepoint (nullary maps are active).
bool is_active(const OMorphism& f);
// Inert: every destination slot receives exactly one source slot, with the
// identical open; remaining source slots go to the basepoint.
bool is_inert(const OMorphism& f);
// Canonical factorization f = active ∘ inert; the inert part discards the
// basepoint-bound slots, the active part is the rest. Returns {inert, active}.
std::pair<OMorphism, OMorphism> factor_active_inert(const StratSpace& space,
                                                    const OMorphism& f);

// True iff for every destination slot the disjoint union of its fiber opens
// equals the destination open exactly and that open is listed in `un`.
bool is_cocartesian(const StratSpace& space, const OMorphism& f, const Universe& un);

// Partition of {0, ..., size-1} in canonical form: block ids are assigned by
// first occurrence, so block_of[0] == 0 and each new id extends the range.
struct EqRel {
  std::vector<int> block_of;

  EqRel() = default;
  explicit EqRel(std::vector<int> raw);  // renumbers into canonical form
  int size() const { return static_cast<int>(block_of.size()); }
  int num_blocks() const;
  std::vector<std::vector<int>> blocks() const;
};
bool operator==(const EqRel& a, const EqRel& b);
bool operator!=(const EqRel& a, const EqRel& b);
bool operator<(const EqRel& a, const EqRel& b);

// True iff every fine block is contained in one coarse block (as relations,
// fine ⊆ coarse).
bool refines(const EqRel& fine, const EqRel& coarse);
// Common refinement (blockwise intersection).
EqRel meet(const EqRel& a, const EqRel& b);

// For an active map into a 1-tuple with target open b: the finest equivalence
// relation on the components of b joining any two components met by the same
// source open.
EqRel encode_active(const StratSpace& space, const OMorphism& alpha);
// For a component-exact map into a 1-tuple (the source opens partition the
// components of b): the partition grouping components by source slot.
EqRel encode_cocart(const StratSpace& space, const OMorphism& gamma);
// Rebuilds the active-cocartesian map with one source open per block, blocks
// ordered by smallest component index. Throws BlockNotInUniverse if a block
// union is unlisted.
OMorphism decode_cocart(const StratSpace& space, const EqRel& rel, const OpenSet& b,
                        const Universe& un);
// One cocartesian map per partition of the components of b whose block unions
// are all listed; deterministic order.
std::vector<OMorphism> enumerate_cocart_into(const StratSpace& space, const OpenSet& b,
                                             const Universe& un);

// Factorizations of an active map alpha into a 1-tuple through cocartesian
// maps listed in `small`: the poset of equivalence relations coarsening the
// encoding of alpha whose block unions are listed in `small`, ordered by
// refinement.
struct KalphaReport {
  std::vector<EqRel> relations;
  FinPoset poset;
  bool empty = true;
  bool codirected = true;
  std::string witness;
};
KalphaReport factorization_poset(const StratSpace& space, const OMorphism& alpha,
                                 const Universe& small, const Universe& big);

// For a 0- or 1-ary operation iota: ō → o′ between cone-point opens on a
// star: returns a: (ō, o″) → o′ where o″ is the interior of o′ minus the
// closure of ō and the cone point. Throws ComplementNotInUniverse if o″ is
// empty or unlisted.
OMorphism complement_op(const StratSpace& space, const OMorphism& iota,
                        const Universe& un);

// Radially symmetric open: identical interval lists on every ray.
bool is_horizontal(const StratSpace& space, const OpenSet& u);
bool contains_cone_point(const StratSpace& space, const OpenSet& u);

// Assumption scan for the decomposition of a star chart into the cone-point
// colors (horizontal opens through the cone point) and the punctured colors
// (nonempty opens avoiding it):
//   items[0]: every color is horizontal or avoids the cone point
//   items[1]: no nontrivial automorphisms; strict inclusions compose strictly
//   items[2]: each color admits a unique nullary operation
//   items[3]: at most one cone-point input per operation, cone-point output
//   items[4]: inputs pairwise non-isomorphic (fails iff ∅ is a color)
//   items[5]: complements of cone-point operations exist in the chart and
//             absorb every punctured operation into o′ disjoint from ō
struct AssumptionItem {
  bool ok = true;
  std::string witness;
};
struct PushoutReport {
  std::array<AssumptionItem, 6> items;
  bool all_ok() const;
};
PushoutReport check_pushout_assumptions(const Universe& chart);

}  // namespace factline
