#pragma once

#include <factline/rational.hpp>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace factline {

struct BadOpen : std::runtime_error {
  explicit BadOpen(const std::string& what) : std::runtime_error(what) {}
};
struct OverlapError : std::runtime_error {
  explicit OverlapError(const std::string& what) : std::runtime_error(what) {}
};
struct NotDisks : std::runtime_error {
  explicit NotDisks(const std::string& what) : std::runtime_error(what) {}
};
struct UnsupportedMap : std::runtime_error {
  explicit UnsupportedMap(const std::string& what) : std::runtime_error(what) {}
};
struct EmptyCover : std::runtime_error {
  explicit EmptyCover(const std::string& what) : std::runtime_error(what) {}
};

// Open bounded rational interval (lo, hi), lo < hi.
struct Interval {
  Rat lo, hi;
};
bool operator==(const Interval& a, const Interval& b);
bool operator<(const Interval& a, const Interval& b);

// Space components. A line with exactly one mark is canonicalized to a 2-ray
// star on space construction, so the deepest-stratum logic is uniform.
struct LineComp {
  std::vector<Rat> marks;  // strictly increasing
};
struct CircleComp {
  Rat circumference;
  std::vector<Rat> marks;  // strictly increasing, in [0, circumference)
};
struct StarComp {
  int rays = 1;  // cone on `rays` points, vertex at radius 0
};
using Component = std::variant<LineComp, CircleComp, StarComp>;
bool operator==(const LineComp& a, const LineComp& b);
bool operator==(const CircleComp& a, const CircleComp& b);
bool operator==(const StarComp& a, const StarComp& b);

struct StratSpace {
  std::vector<Component> components;

  StratSpace() = default;
  explicit StratSpace(std::vector<Component> comps);  // validates, canonicalizes

  static StratSpace line(std::vector<Rat> marks = {});
  static StratSpace circle(Rat circumference, std::vector<Rat> marks = {});
  static StratSpace star(int rays);
  static StratSpace disjoint(const StratSpace& a, const StratSpace& b);
};
bool operator==(const StratSpace& a, const StratSpace& b);

// Per-component open data.
struct LineOpen {
  std::vector<Interval> intervals;  // sorted, pairwise disjoint (touching allowed)
};
// Circular arc (start, end): start in [0, L), end in (start, start + L].
// end - start == L encodes the circle minus the start point; the full circle
// is not representable.
struct Arc {
  Rat start, end;
};
struct CircleOpen {
  std::vector<Arc> arcs;  // sorted by start, pairwise disjoint on the circle
};
struct StarOpen {
  std::vector<std::vector<Interval>> per_ray;  // radius coordinates, lo >= 0
  bool vertex = false;                         // vertex => first interval on every ray is (0, x_r)
};
bool operator==(const Arc& a, const Arc& b);
bool operator<(const Arc& a, const Arc& b);
bool operator==(const LineOpen& a, const LineOpen& b);
bool operator<(const LineOpen& a, const LineOpen& b);
bool operator==(const CircleOpen& a, const CircleOpen& b);
bool operator<(const CircleOpen& a, const CircleOpen& b);
bool operator==(const StarOpen& a, const StarOpen& b);
bool operator<(const StarOpen& a, const StarOpen& b);

using ComponentOpen = std::variant<LineOpen, CircleOpen, StarOpen>;

struct OpenSet {
  std::vector<ComponentOpen> parts;  // one entry per space component
};
bool operator==(const OpenSet& a, const OpenSet& b);
bool operator<(const OpenSet& a, const OpenSet& b);  // total order for keys/dedup

// Throws BadOpen unless `u` is well-formed on `space`.
void validate_open(const StratSpace& space, const OpenSet& u);

OpenSet empty_open(const StratSpace& space);
bool is_empty(const OpenSet& u);

// Converts line-coordinate intervals on a one-mark line to its canonical 2-ray
// star representation (ray 0 = below the mark, reversed; ray 1 = above).
StarOpen star2_from_line_intervals(const Rat& mark, std::vector<Interval> intervals);

bool is_subset(const StratSpace& space, const OpenSet& a, const OpenSet& b);
bool is_disjoint(const StratSpace& space, const OpenSet& a, const OpenSet& b);
OpenSet intersect(const StratSpace& space, const OpenSet& a, const OpenSet& b);
// Throws OverlapError unless a, b disjoint.
OpenSet disjoint_union(const StratSpace& space, const OpenSet& a, const OpenSet& b);

// One connected component of an open set.
struct Piece {
  enum class Kind { INTERVAL, ARC, RAY_INTERVAL, VERTEX_STAR };
  Kind kind = Kind::INTERVAL;
  int comp = 0;  // space component index
  Interval interval{};           // INTERVAL, RAY_INTERVAL
  Arc arc{};                     // ARC
  int ray = -1;                  // RAY_INTERVAL
  std::vector<Interval> germs;   // VERTEX_STAR: one (0, x_r) germ per ray
};

// Canonical order: by space component; within a line ascending, within a circle
// by arc start, within a star the vertex piece first then (ray, position).
std::vector<Piece> connected_pieces(const StratSpace& space, const OpenSet& u);

// Rebuilds the open set consisting of exactly one piece.
OpenSet piece_open(const StratSpace& space, const Piece& piece);
// Union of a subset of pieces of an open (pieces must come from one open).
OpenSet pieces_open(const StratSpace& space, const std::vector<Piece>& pieces);

// k == 0 encodes an unmarked interval; k >= 1 the cone on k points.
struct DiskType {
  int k = 0;
};
bool operator==(const DiskType& a, const DiskType& b);
bool operator<(const DiskType& a, const DiskType& b);

// One type per connected piece, in canonical piece order; nullopt if some piece
// is not an embedded disk (it meets two or more marks).
std::optional<std::vector<DiskType>> classify_multidisk(const StratSpace& space, const OpenSet& u);

// For u subset v: maps each u-piece index to the v-piece containing it.
std::vector<int> piece_containment_map(const StratSpace& space, const OpenSet& u, const OpenSet& v);

// True iff u -> v induces a piecewise bijection matching disk types (every
// v-piece receives exactly one u-piece of the same type; cone pieces of v must
// keep their deepest point in u). Throws NotContained / NotDisks.
bool is_iso_inclusion(const StratSpace& space, const OpenSet& u, const OpenSet& v);

struct Universe {
  StratSpace space;
  std::vector<OpenSet> opens;  // deduplicated, sorted

  Universe() = default;
  Universe(StratSpace space_, std::vector<OpenSet> opens_);
  bool contains(const OpenSet& u) const;
};

Universe close_intersections(const Universe& un);     // adds nonempty pairwise meets
Universe close_disjoint_unions(const Universe& un);   // adds the empty open and all disjoint unions
std::function<bool(const OpenSet&)> sieve_predicate(const Universe& un);

// A rational point of the space.
struct Point {
  enum class Kind { LINE, CIRCLE, RAY, VERTEX };
  Kind kind = Kind::LINE;
  int comp = 0;
  Rat x;         // line coordinate / circle angle / ray radius
  int ray = -1;  // RAY only
};
bool operator==(const Point& a, const Point& b);
bool operator<(const Point& a, const Point& b);
std::string point_to_string(const Point& p);

bool contains_point(const StratSpace& space, const OpenSet& u, const Point& p);

// All points of u with denominator <= denom_bound, plus every mark and vertex
// lying in u (deepest strata are always sampled).
std::vector<Point> grid_points(const StratSpace& space, const OpenSet& u, int denom_bound);

enum class BasisMode { multiplicative, factorizing, decomposable };

struct PredicateReport {
  bool ok = true;
  std::string witness;  // human-readable counterexample when !ok
};

// multiplicative: every grid point of every ambient open has a basis element
// through it inside that open, and disjoint unions subordinate to an ambient
// open stay in the basis. factorizing adds closure under nonempty pairwise
// intersections. decomposable: every sub-union of pieces of a listed open is
// listed.
PredicateReport basis_predicate(const Universe& basis, const Universe& ambient, BasisMode mode,
                                int grid);

struct WeissResult {
  bool ok = false;
  std::string certificate;      // "exact" or the finite certification level
  std::vector<Point> missing;   // witness subset no member contains (on failure)
};

// Finite-list mode: every <= s_max subset of the grid points of u must lie in
// some member. Throws EmptyCover.
WeissResult is_weiss_cover(const StratSpace& space, const std::vector<OpenSet>& cover,
                           const OpenSet& u, int grid, int s_max);
// The tautological cover of u by complements of finite point sets; exact.
WeissResult weiss_compl_compact(const StratSpace& space, const OpenSet& u);

enum class MapKind { CONE_PROJ, FOLD, CIRCLE_VPROJ, SQUARE };

// Supported stratified maps, by their effect on opens. SQUARE is the fold of a
// 2-ray star onto a half line embedded in its target (radius_target = radius_source
// on both rays); with marked_target the target is the canonical 2-ray star of a
// one-mark line and only ray 1 plus the vertex receive points.
struct MapDescriptor {
  MapKind kind = MapKind::CONE_PROJ;
  StratSpace source, target;
  int copies = 0;  // FOLD
  Rat s1, s2;      // CIRCLE_VPROJ projected mark heights, s1 < s2

  static MapDescriptor cone_proj(int rays);
  static MapDescriptor fold(const StratSpace& base, int n);
  static MapDescriptor circle_vproj(const Rat& circumference, const Rat& s1, const Rat& s2);
  static MapDescriptor square(bool marked_target);
};

// Exact preimage of a target open. Throws UnsupportedMap when the preimage is
// not representable (a single target interval containing both projected marks
// of CIRCLE_VPROJ pulls back to the full circle).
OpenSet preimage(const MapDescriptor& m, const OpenSet& v);

// Forward image of a single point (total on source points).
Point apply_map(const MapDescriptor& m, const Point& p);

}  // namespace factline
