#pragma once

#include <factline/fdvect.hpp>
#include <factline/openoperad.hpp>
#include <factline/stratline.hpp>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace factline {

struct AxiomFailure : std::runtime_error {
  explicit AxiomFailure(const std::string& what) : std::runtime_error(what) {}
};
struct MarkedOpenInUniverse : std::runtime_error {
  explicit MarkedOpenInUniverse(const std::string& what) : std::runtime_error(what) {}
};
struct MissingPoint : std::runtime_error {
  explicit MissingPoint(const std::string& what) : std::runtime_error(what) {}
};
struct MissingIntersection : std::runtime_error {
  explicit MissingIntersection(const std::string& what) : std::runtime_error(what) {}
};
struct ChainNotCofinal : std::runtime_error {
  explicit ChainNotCofinal(const std::string& what) : std::runtime_error(what) {}
};
struct PreimageUnlisted : std::runtime_error {
  explicit PreimageUnlisted(const std::string& what) : std::runtime_error(what) {}
};
struct UniverseMismatch : std::runtime_error {
  explicit UniverseMismatch(const std::string& what) : std::runtime_error(what) {}
};
struct NotFactorizing : std::runtime_error {
  explicit NotFactorizing(const std::string& what) : std::runtime_error(what) {}
};
struct ShortcutChoiceDependent : std::runtime_error {
  explicit ShortcutChoiceDependent(const std::string& what) : std::runtime_error(what) {}
};
struct NoDecompositionListed : std::runtime_error {
  explicit NoDecompositionListed(const std::string& what) : std::runtime_error(what) {}
};
struct ChoiceDependent : std::runtime_error {
  explicit ChoiceDependent(const std::string& what) : std::runtime_error(what) {}
};
struct OverlapMismatch : std::runtime_error {
  explicit OverlapMismatch(const std::string& what) : std::runtime_error(what) {}
};
struct MissingOpens : std::runtime_error {
  explicit MissingOpens(const std::string& what) : std::runtime_error(what) {}
};
struct ModuleAxiomFailure : std::runtime_error {
  explicit ModuleAxiomFailure(const std::string& what) : std::runtime_error(what) {}
};

// Associative unital algebra over the rationals.
struct Algebra {
  VectObj carrier;
  LinMap mult;  // carrier (x) carrier -> carrier
  LinMap unit;  // Q -> carrier
};

// Validates associativity and two-sided unitality exactly; throws AxiomFailure.
Algebra make_algebra(VectObj carrier, LinMap mult, LinMap unit);
Algebra scalar_algebra();  // Q with its own multiplication
Algebra opposite_algebra(const Algebra& a);
Algebra tensor_algebra(const Algebra& a, const Algebra& b);

// (left, right)-bimodule with one combined action and an optional pointing.
struct Bimodule {
  Algebra left;
  Algebra right;
  VectObj carrier;
  LinMap action;               // left (x) carrier (x) right -> carrier
  std::optional<LinMap> point; // Q -> carrier
};

Bimodule make_bimodule(Algebra left, Algebra right, VectObj carrier, LinMap action,
                       std::optional<LinMap> point = std::nullopt);

// One-sided module data; axioms are validated against the acting algebra at use.
struct RightModule {
  VectObj carrier;
  LinMap action;  // carrier (x) alg -> carrier
};
struct LeftModule {
  VectObj carrier;
  LinMap action;  // alg (x) carrier -> carrier
};
RightModule regular_right_module(const Algebra& a);
LeftModule regular_left_module(const Algebra& a);

struct Report {
  bool ok = true;
  std::string code;  // distinguishes failure flavors ("not-stabilized", ...)
  std::vector<std::string> witnesses;
};

// Prefactorization algebra on a listed universe of opens. Generated by the
// inclusion maps and the binary disjoint-union multiplications; `incl` stores
// the full transitive family (every listed proper pair), `mult` one map per
// ordered listed cocartesian pair, keyed by source indices.
struct PreFactAlg {
  Universe universe;
  std::vector<VectObj> values;
  std::map<std::pair<int, int>, LinMap> incl;
  std::map<std::pair<int, int>, LinMap> mult;
  std::optional<LinMap> unit_empty;  // Q -> value(empty) when the empty open is listed
};

// Index of a listed open; throws NotContained.
int open_index(const Universe& un, const OpenSet& u);

// Closes `incl` transitively from the given family (at least all Hasse pairs),
// fills in both orders of `mult` from either one via the symmetry, then runs
// the coherence sweep; throws IncoherentDiagram on any failure.
PreFactAlg make_prefact(Universe un, std::vector<VectObj> values,
                        std::map<std::pair<int, int>, LinMap> incl,
                        std::map<std::pair<int, int>, LinMap> mult,
                        std::optional<LinMap> unit_empty);

// Functoriality of inclusions, symmetry and naturality of the multiplications,
// associativity of adjacent multiplications, unit laws at the empty open.
Report check_coherence(const PreFactAlg& f);

// Map assigned to u <= v (identity when equal); throws NotContained.
LinMap inclusion_map(const PreFactAlg& f, const OpenSet& u, const OpenSet& v);

// Derived map of an arbitrary active tuple morphism with listed opens: group
// the source factors by destination slot, multiply each fiber along some
// listed route, include into the slot open; empty fibers insert the unit.
LinMap structure_map(const PreFactAlg& f, const OMorphism& alpha);

bool prefact_equal(const PreFactAlg& a, const PreFactAlg& b);

// Interval algebra on an unmarked line or circle: every disk gets the carrier,
// inclusions multiply in ascending order (circle: orientation order within the
// target arc), disjoint unions are tensor products.
PreFactAlg from_interval_algebra(const Algebra& a, const StratSpace& space, const Universe& un);

// Bimodule algebra on the one-mark line (canonical 2-ray star): left algebra
// left of the mark, carrier on marked disks, right algebra on the right; the
// pointing is inserted when no source meets the mark. Throws MissingPoint.
PreFactAlg from_bimodule(const Bimodule& m, const StratSpace& space, const Universe& un);

// Every listed cocartesian pair must multiply by an isomorphism, and the empty
// value must be a point when listed.
Report check_multiplicativity(const PreFactAlg& f);

// Every listed inclusion of abstractly isomorphic multidisks must be an
// isomorphism. The scope overload restricts to inclusions inside the listed
// scope opens; the local variant checks members of `cover` first and then
// confirms the implication to the full universe.
Report check_constructible(const PreFactAlg& f);
Report check_constructible(const PreFactAlg& f, const std::vector<OpenSet>& scope);
Report check_constructible_local(const PreFactAlg& f, const std::vector<OpenSet>& cover);

struct PrecoverValue {
  VectObj value;
  std::vector<LinMap> cocone;  // one leg per nonempty cover subset, mask order
  LinMap comparison;           // value -> f(u)
};

// Colimit over the punctured cube of intersections of the cover members, with
// the comparison to the value on u. All intersections must be listed; throws
// MissingIntersection.
PrecoverValue evaluate_on_precover(const PreFactAlg& f, const std::vector<OpenSet>& cover,
                                   const OpenSet& u);

// Finite mode: the precover comparison map is an isomorphism.
Report check_weiss_descent(const PreFactAlg& f, const std::vector<OpenSet>& cover,
                           const OpenSet& u);
// Chain mode: the ascending chain must absorb every listed proper subopen of u
// (else ChainNotCofinal); the values must stabilize along the chain (distinct
// "not-stabilized" report otherwise) and match the value on u.
Report check_weiss_chain(const PreFactAlg& f, const std::vector<OpenSet>& chain, const OpenSet& u);

// Restriction to the listed opens contained in w.
PreFactAlg restrict_to(const PreFactAlg& f, const OpenSet& w);
// (p_* f)(U) = f(p^{-1} U) on the given target universe; every preimage must be
// listed in the source universe (PreimageUnlisted).
PreFactAlg pushforward(const PreFactAlg& f, const MapDescriptor& p, const Universe& target);
// Valuewise tensor product with middle-four interchange; UniverseMismatch
// unless the universes agree.
PreFactAlg tensor_product(const PreFactAlg& f, const PreFactAlg& g);

// Declared verification data for one extended open: a finite intersection
// closed subfamily and a refinement of it, each of which must compare
// isomorphically to the extension value.
struct ExtensionDeclaration {
  OpenSet open;
  std::vector<OpenSet> weiss_family;
  std::vector<OpenSet> refinement;
};

// Left Kan extension of a factorizing-basis algebra to an ambient universe:
// values on new opens are colimits over the listed basis opens below, with all
// structure maps induced by the colimit cocones; restriction to the basis is
// the input, exactly. On multidisks of a constructible input every listed
// abstractly isomorphic basis subdisk must compare isomorphically (else
// ShortcutChoiceDependent). Throws NotFactorizing when the basis predicate
// fails.
PreFactAlg extend_from_basis(const PreFactAlg& f, const Universe& ambient,
                             const std::vector<ExtensionDeclaration>& decls = {},
                             int grid = 4);

// Extension of a decomposable-universe algebra to its disjoint union
// completion: each added open takes the tensor value of its first listed
// decomposition, after verifying that any two listed decompositions compare
// isomorphically through their common refinement (ChoiceDependent otherwise;
// NoDecompositionListed when an added open has no listed decomposition).
PreFactAlg extend_disjoint_completion(const PreFactAlg& f, int grid = 4);

// Removes the empty open; re-adjoins it, deriving the inclusion maps out of
// the empty open from the unit laws against listed disjoint partners.
PreFactAlg strip_empty(const PreFactAlg& f);
PreFactAlg adjoin_empty(const PreFactAlg& f);

struct GluePiece {
  OpenSet open;
  PreFactAlg alg;  // universe listed below `open`
};

// Strict gluing over a cover: the pieces must list every glued open below
// their own open and agree exactly on shared data (OverlapMismatch with the
// witness open otherwise); restriction of the result to any piece open
// reproduces that piece.
PreFactAlg glue_from_cover(const std::vector<GluePiece>& pieces);

struct BarResult {
  VectObj value;
  LinMap quotient;  // m1 (x) m2 ->> value
};

// Relative tensor product as the reflexive coequalizer of the two actions on
// m1 (x) a (x) m2; module axioms are validated exactly (AxiomFailure).
BarResult bar_relative_tensor(const RightModule& m1, const Algebra& a, const LeftModule& m2);

// Global sections of the circle algebra on a: the relative tensor product of a
// with itself over a (x) a^op, with the two outer actions a.x.b = axb and
// a.x.b = bxa; equals the quotient of a by the span of commutators.
VectObj circle_sections(const Algebra& a);

// Cone decomposition data on a k-ray star: one algebra per punctured ray and a
// pointed module over their tensor algebra. Per-ray source factors collapse
// far-to-near, so on the one-mark line the right-hand ray carries the opposite
// algebra of the bimodule picture.
struct ConeData {
  std::vector<Algebra> ray;
  VectObj carrier;  // module at the cone point
  LinMap point;     // Q -> carrier
  LinMap action;    // (ray_1 (x) ... (x) ray_k) (x) carrier -> carrier
};

struct ConeDecomposition {
  ConeData data;
  PreFactAlg half_line;  // pushforward along the cone projection, on a 1-ray star
};

// Extracts the cone data from a star algebra by probing listed opens (nested
// cone disks, per-ray gap intervals; MissingOpens when the universe lacks
// them) and builds the pushforward along the cone projection.
ConeDecomposition cone_decompose(const PreFactAlg& f);

// Builds the star algebra with the given cone data on the given universe;
// validates the module axioms with respect to the tensor algebra of the ray
// algebras (ModuleAxiomFailure).
PreFactAlg cone_assemble(const ConeData& d, const Universe& un);

}  // namespace factline
