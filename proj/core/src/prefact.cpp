#include <factline/prefact.hpp>

#include <factline/finposet.hpp>

#include <algorithm>
#include <bit>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

namespace factline {

namespace {

using Key = std::pair<int, int>;

std::string open_to_string(const OpenSet& u) {
  if (is_empty(u)) return "empty";
  std::ostringstream out;
  bool first_part = true;
  for (int c = 0; c < static_cast<int>(u.parts.size()); ++c) {
    const ComponentOpen& part = u.parts[c];
    std::ostringstream body;
    bool nonempty = false;
    if (const auto* lo = std::get_if<LineOpen>(&part)) {
      bool first = true;
      for (const Interval& iv : lo->intervals) {
        if (!first) body << "+";
        body << "(" << rat_to_string(iv.lo) << "," << rat_to_string(iv.hi) << ")";
        first = false;
        nonempty = true;
      }
    } else if (const auto* co = std::get_if<CircleOpen>(&part)) {
      bool first = true;
      for (const Arc& a : co->arcs) {
        if (!first) body << "+";
        body << "arc(" << rat_to_string(a.start) << "," << rat_to_string(a.end) << ")";
        first = false;
        nonempty = true;
      }
    } else if (const auto* so = std::get_if<StarOpen>(&part)) {
      bool first = true;
      if (so->vertex) {
        body << "vertex";
        first = false;
        nonempty = true;
      }
      for (int r = 0; r < static_cast<int>(so->per_ray.size()); ++r) {
        for (const Interval& iv : so->per_ray[r]) {
          if (!first) body << "+";
          body << "r" << r << "(" << rat_to_string(iv.lo) << "," << rat_to_string(iv.hi)
               << ")";
          first = false;
          nonempty = true;
        }
      }
    }
    if (!nonempty) continue;
    if (!first_part) out << ";";
    out << "c" << c << ":" << body.str();
    first_part = false;
  }
  return out.str();
}

VectObj tensor_many(const std::vector<VectObj>& xs) {
  if (xs.empty()) return VectObj::unit();
  VectObj acc = xs[0];
  for (int i = 1; i < static_cast<int>(xs.size()); ++i) acc = tensor(acc, xs[i]);
  return acc;
}

LinMap tensor_many_maps(const std::vector<LinMap>& fs) {
  if (fs.empty()) return LinMap::identity(VectObj::unit());
  LinMap acc = fs[0];
  for (int i = 1; i < static_cast<int>(fs.size()); ++i) acc = tensor(acc, fs[i]);
  return acc;
}

// Permutation of tensor factors; order[p] = index of the factor placed at
// position p of the target.
LinMap factor_permutation(const std::vector<VectObj>& factors,
                          const std::vector<int>& order) {
  const int k = static_cast<int>(factors.size());
  std::vector<int> dims(k);
  int total = 1;
  for (int i = 0; i < k; ++i) {
    dims[i] = factors[i].dim;
    total *= dims[i];
  }
  std::vector<VectObj> reordered(k);
  for (int p = 0; p < k; ++p) reordered[p] = factors[order[p]];
  const VectObj src = tensor_many(factors);
  const VectObj dst = tensor_many(reordered);
  std::vector<int> perm(total);
  std::vector<int> digits(k, 0);
  for (int flat = 0; flat < total; ++flat) {
    int rem = flat;
    for (int i = k - 1; i >= 0; --i) {
      digits[i] = dims[i] == 0 ? 0 : rem % dims[i];
      rem = dims[i] == 0 ? rem : rem / dims[i];
    }
    int out = 0;
    for (int p = 0; p < k; ++p) out = out * dims[order[p]] + digits[order[p]];
    perm[flat] = out;
  }
  return LinMap::basis_permutation(src, dst, perm);
}

LinMap inverse_of(const LinMap& f) {
  if (f.src.dim != f.dst.dim) throw IncoherentDiagram("map is not invertible");
  auto inv = factor_through_surjection(f, LinMap::identity(f.src));
  if (!inv) throw IncoherentDiagram("map is not invertible");
  return *inv;
}

// Horizontal concatenation: one map out of the direct sum of the block sources.
LinMap hcat(const std::vector<LinMap>& blocks, const VectObj& dst) {
  int cols = 0;
  for (const LinMap& b : blocks) cols += b.src.dim;
  Matrix m(dst.dim, std::vector<Rat>(cols, Rat(0)));
  int off = 0;
  for (const LinMap& b : blocks) {
    for (int r = 0; r < dst.dim; ++r)
      for (int c = 0; c < b.src.dim; ++c) m[r][off + c] = b.matrix[r][c];
    off += b.src.dim;
  }
  return LinMap(VectObj::with_dim(cols, "s"), dst, std::move(m));
}

int index_of(const Universe& un, const OpenSet& u) {
  auto it = std::lower_bound(un.opens.begin(), un.opens.end(), u);
  if (it == un.opens.end() || !(*it == u)) return -1;
  return static_cast<int>(it - un.opens.begin());
}

int empty_index(const Universe& un) { return index_of(un, empty_open(un.space)); }

// n-fold multiplication, leftmost factors first; 0 -> unit, 1 -> identity.
LinMap fold_mult(const Algebra& a, int n) {
  if (n == 0) return a.unit;
  LinMap acc = LinMap::identity(a.carrier);
  for (int t = 1; t < n; ++t) acc = compose(a.mult, tensor(acc, LinMap::identity(a.carrier)));
  return acc;
}

void validate_algebra(const Algebra& a) {
  const int c = a.carrier.dim;
  if (a.mult.src.dim != c * c || a.mult.dst.dim != c || a.unit.src.dim != 1 ||
      a.unit.dst.dim != c)
    throw AxiomFailure("algebra structure maps have wrong shapes");
  const LinMap id = LinMap::identity(a.carrier);
  if (!(compose(a.mult, tensor(a.mult, id)) == compose(a.mult, tensor(id, a.mult))))
    throw AxiomFailure("multiplication is not associative");
  const VectObj q = VectObj::unit();
  if (!(compose(a.mult, tensor(a.unit, id)) ==
        LinMap::identity_reshaped(tensor(q, a.carrier), a.carrier)))
    throw AxiomFailure("left unit law fails");
  if (!(compose(a.mult, tensor(id, a.unit)) ==
        LinMap::identity_reshaped(tensor(a.carrier, q), a.carrier)))
    throw AxiomFailure("right unit law fails");
}

Rat mod_pos(Rat x, const Rat& circ) {
  while (x < 0) x += circ;
  while (x >= circ) x -= circ;
  return x;
}

// Fiber order within one target piece: ascending along lines and rays,
// ascending from the target arc's start along circles.
std::vector<int> order_fiber(const StratSpace& space, const std::vector<Piece>& up,
                             const std::vector<int>& fiber, const Piece& target) {
  std::vector<int> out = fiber;
  if (target.kind == Piece::Kind::ARC) {
    const auto& comp = std::get<CircleComp>(space.components[target.comp]);
    std::stable_sort(out.begin(), out.end(), [&](int a, int b) {
      return mod_pos(up[a].arc.start - target.arc.start, comp.circumference) <
             mod_pos(up[b].arc.start - target.arc.start, comp.circumference);
    });
  }
  return out;  // canonical piece order is already ascending elsewhere
}

// Pure factor matching for the multiplication of a disjoint listed pair: the
// pieces of u then v, permuted into the canonical piece order of their union.
LinMap matching_mult(const StratSpace& space, const OpenSet& u, const OpenSet& v,
                     const OpenSet& w, const std::vector<VectObj>& ufac,
                     const std::vector<VectObj>& vfac) {
  const auto upieces = connected_pieces(space, u);
  const auto vpieces = connected_pieces(space, v);
  const auto wpieces = connected_pieces(space, w);
  std::vector<OpenSet> piece_opens;
  piece_opens.reserve(upieces.size() + vpieces.size());
  for (const Piece& p : upieces) piece_opens.push_back(piece_open(space, p));
  for (const Piece& p : vpieces) piece_opens.push_back(piece_open(space, p));
  std::vector<int> order;
  order.reserve(wpieces.size());
  for (const Piece& wp : wpieces) {
    const OpenSet wo = piece_open(space, wp);
    int found = -1;
    for (int t = 0; t < static_cast<int>(piece_opens.size()); ++t)
      if (piece_opens[t] == wo) {
        found = t;
        break;
      }
    if (found < 0) throw IncoherentDiagram("disjoint union does not match its pieces");
    order.push_back(found);
  }
  std::vector<VectObj> factors = ufac;
  factors.insert(factors.end(), vfac.begin(), vfac.end());
  return factor_permutation(factors, order);
}

// Shared skeleton for the standard builders: values are tensors of per-piece
// carriers, inclusions are per-target-piece slot composites, multiplications
// are factor matchings.
struct PieceModel {
  // value carrier of one piece
  std::function<VectObj(const Piece&)> carrier;
  // slot composite for an ordered fiber of source pieces landing in `target`;
  // `fiber_pieces` lists the source pieces in their chosen order
  std::function<LinMap(const std::vector<Piece>& fiber_pieces, const Piece& target)> slot;
};

PreFactAlg standard_prefact(const Universe& un, const PieceModel& model) {
  const StratSpace& sp = un.space;
  const int n = static_cast<int>(un.opens.size());
  std::vector<std::vector<Piece>> pieces(n);
  std::vector<std::vector<VectObj>> factors(n);
  std::vector<VectObj> values(n);
  for (int i = 0; i < n; ++i) {
    pieces[i] = connected_pieces(sp, un.opens[i]);
    for (const Piece& p : pieces[i]) factors[i].push_back(model.carrier(p));
    values[i] = tensor_many(factors[i]);
  }
  std::map<Key, LinMap> incl;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || !is_subset(sp, un.opens[i], un.opens[j])) continue;
      const std::vector<int> cont = piece_containment_map(sp, un.opens[i], un.opens[j]);
      std::vector<LinMap> slots;
      std::vector<int> global_order;
      for (int t = 0; t < static_cast<int>(pieces[j].size()); ++t) {
        std::vector<int> fiber;
        for (int p = 0; p < static_cast<int>(pieces[i].size()); ++p)
          if (cont[p] == t) fiber.push_back(p);
        fiber = order_fiber(sp, pieces[i], fiber, pieces[j][t]);
        std::vector<Piece> fiber_pieces;
        for (int p : fiber) fiber_pieces.push_back(pieces[i][p]);
        slots.push_back(model.slot(fiber_pieces, pieces[j][t]));
        global_order.insert(global_order.end(), fiber.begin(), fiber.end());
      }
      incl.emplace(Key{i, j}, compose(tensor_many_maps(slots),
                                      factor_permutation(factors[i], global_order)));
    }
  }
  std::map<Key, LinMap> mult;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!is_disjoint(sp, un.opens[i], un.opens[j])) continue;
      const OpenSet w = disjoint_union(sp, un.opens[i], un.opens[j]);
      const int k = index_of(un, w);
      if (k < 0) continue;
      mult.emplace(Key{i, j}, matching_mult(sp, un.opens[i], un.opens[j], w, factors[i],
                                            factors[j]));
    }
  }
  std::optional<LinMap> unit;
  const int e = empty_index(un);
  if (e >= 0) unit = LinMap::identity_reshaped(VectObj::unit(), values[e]);
  return make_prefact(un, std::move(values), std::move(incl), std::move(mult),
                      std::move(unit));
}

// Rejects listed opens that are not unmarked multidisks.
void require_unmarked_multidisks(const StratSpace& sp, const Universe& un) {
  for (const OpenSet& u : un.opens) {
    if (is_empty(u)) continue;
    const auto types = classify_multidisk(sp, u);
    if (!types) throw MarkedOpenInUniverse("open is not a multidisk: " + open_to_string(u));
    for (const DiskType& t : *types)
      if (t.k != 0)
        throw MarkedOpenInUniverse("open meets a stratum point: " + open_to_string(u));
  }
}

void validate_cone_module(const ConeData& d) {
  if (d.ray.empty()) throw BadConfiguration("cone data needs at least one ray algebra");
  for (const Algebra& a : d.ray) validate_algebra(a);
  Algebra t = d.ray[0];
  for (int r = 1; r < static_cast<int>(d.ray.size()); ++r) t = tensor_algebra(t, d.ray[r]);
  const int m = d.carrier.dim;
  if (d.action.src.dim != t.carrier.dim * m || d.action.dst.dim != m)
    throw ModuleAxiomFailure("cone action has wrong shape");
  if (d.point.src.dim != 1 || d.point.dst.dim != m)
    throw ModuleAxiomFailure("cone pointing has wrong shape");
  const LinMap idm = LinMap::identity(d.carrier);
  const LinMap idt = LinMap::identity(t.carrier);
  if (!(compose(d.action, tensor(t.mult, idm)) == compose(d.action, tensor(idt, d.action))))
    throw ModuleAxiomFailure("cone action is not associative over the ray tensor algebra");
  if (!(compose(d.action, tensor(t.unit, idm)) ==
        LinMap::identity_reshaped(tensor(VectObj::unit(), d.carrier), d.carrier)))
    throw ModuleAxiomFailure("cone action violates the unit law");
}

// Builder for a cone algebra on a star universe: ray pieces carry the ray
// algebras folded far-to-near, vertex pieces carry the module with the
// pointing inserted when no vertex piece sits in the source.
PreFactAlg standard_star_prefact(const ConeData& d, const Universe& un) {
  const StratSpace& sp = un.space;
  if (sp.components.size() != 1 || !std::holds_alternative<StarComp>(sp.components[0]))
    throw BadConfiguration("cone assembly needs a single star component");
  const int k = std::get<StarComp>(sp.components[0]).rays;
  if (k != static_cast<int>(d.ray.size()))
    throw BadConfiguration("ray count differs between the cone data and the space");
  PieceModel model;
  model.carrier = [&](const Piece& p) {
    return p.kind == Piece::Kind::VERTEX_STAR ? d.carrier : d.ray[p.ray].carrier;
  };
  model.slot = [&, k](const std::vector<Piece>& fiber, const Piece& target) {
    if (target.kind == Piece::Kind::RAY_INTERVAL) {
      // far-to-near fold along one ray
      std::vector<int> order(fiber.size());
      std::iota(order.begin(), order.end(), 0);
      std::reverse(order.begin(), order.end());
      std::vector<VectObj> facs;
      for (const Piece& p : fiber) facs.push_back(d.ray[p.ray].carrier);
      return compose(fold_mult(d.ray[target.ray], static_cast<int>(fiber.size())),
                     factor_permutation(facs, order));
    }
    // vertex target: per-ray folds far-to-near, module factor last
    std::vector<LinMap> ray_folds;
    std::vector<int> order;
    int vertex_pos = -1;
    std::vector<VectObj> facs;
    for (const Piece& p : fiber)
      facs.push_back(p.kind == Piece::Kind::VERTEX_STAR ? d.carrier : d.ray[p.ray].carrier);
    for (int r = 0; r < k; ++r) {
      std::vector<int> ray_fiber;
      for (int t = 0; t < static_cast<int>(fiber.size()); ++t)
        if (fiber[t].kind == Piece::Kind::RAY_INTERVAL && fiber[t].ray == r)
          ray_fiber.push_back(t);
      std::reverse(ray_fiber.begin(), ray_fiber.end());  // descending radius
      order.insert(order.end(), ray_fiber.begin(), ray_fiber.end());
      ray_folds.push_back(fold_mult(d.ray[r], static_cast<int>(ray_fiber.size())));
    }
    for (int t = 0; t < static_cast<int>(fiber.size()); ++t)
      if (fiber[t].kind == Piece::Kind::VERTEX_STAR) vertex_pos = t;
    LinMap mid = vertex_pos >= 0 ? LinMap::identity(d.carrier) : d.point;
    if (vertex_pos >= 0) order.push_back(vertex_pos);
    std::vector<LinMap> slots = ray_folds;
    slots.push_back(mid);
    return compose(compose(d.action, tensor_many_maps(slots)),
                   factor_permutation(facs, order));
  };
  return standard_prefact(un, model);
}

}  // namespace

Algebra make_algebra(VectObj carrier, LinMap mult, LinMap unit) {
  Algebra a{std::move(carrier), std::move(mult), std::move(unit)};
  validate_algebra(a);
  return a;
}

Algebra scalar_algebra() {
  const VectObj q = VectObj::unit();
  return Algebra{q, LinMap::identity_reshaped(tensor(q, q), q), LinMap::identity(q)};
}

Algebra opposite_algebra(const Algebra& a) {
  return Algebra{a.carrier, compose(a.mult, tensor_swap(a.carrier, a.carrier)), a.unit};
}

Algebra tensor_algebra(const Algebra& a, const Algebra& b) {
  const VectObj c = tensor(a.carrier, b.carrier);
  const LinMap interchange = factor_permutation(
      {a.carrier, b.carrier, a.carrier, b.carrier}, {0, 2, 1, 3});
  const VectObj q = VectObj::unit();
  Algebra out{c, compose(tensor(a.mult, b.mult), interchange),
              compose(tensor(a.unit, b.unit),
                      LinMap::identity_reshaped(q, tensor(q, q)))};
  validate_algebra(out);
  return out;
}

Bimodule make_bimodule(Algebra left, Algebra right, VectObj carrier, LinMap action,
                       std::optional<LinMap> point) {
  validate_algebra(left);
  validate_algebra(right);
  const int l = left.carrier.dim, m = carrier.dim, r = right.carrier.dim;
  if (action.src.dim != l * m * r || action.dst.dim != m)
    throw AxiomFailure("bimodule action has wrong shape");
  const LinMap idl = LinMap::identity(left.carrier);
  const LinMap idm = LinMap::identity(carrier);
  const LinMap idr = LinMap::identity(right.carrier);
  if (!(compose(action, tensor(tensor(left.mult, idm), right.mult)) ==
        compose(action, tensor(tensor(idl, action), idr))))
    throw AxiomFailure("bimodule associativity fails");
  const VectObj q = VectObj::unit();
  if (!(compose(action, tensor(tensor(left.unit, idm), right.unit)) ==
        LinMap::identity_reshaped(tensor(tensor(q, carrier), q), carrier)))
    throw AxiomFailure("bimodule unit law fails");
  if (point && (point->src.dim != 1 || point->dst.dim != m))
    throw AxiomFailure("pointing has wrong shape");
  return Bimodule{std::move(left), std::move(right), std::move(carrier),
                  std::move(action), std::move(point)};
}

RightModule regular_right_module(const Algebra& a) { return RightModule{a.carrier, a.mult}; }
LeftModule regular_left_module(const Algebra& a) { return LeftModule{a.carrier, a.mult}; }

int open_index(const Universe& un, const OpenSet& u) {
  const int i = index_of(un, u);
  if (i < 0) throw NotContained("open is not listed in the universe: " + open_to_string(u));
  return i;
}

PreFactAlg make_prefact(Universe un, std::vector<VectObj> values,
                        std::map<std::pair<int, int>, LinMap> incl,
                        std::map<std::pair<int, int>, LinMap> mult,
                        std::optional<LinMap> unit_empty) {
  const int n = static_cast<int>(un.opens.size());
  if (static_cast<int>(values.size()) != n)
    throw BadConfiguration("value count differs from the universe size");
  for (const auto& [key, map] : incl) {
    const auto [i, j] = key;
    if (i < 0 || j < 0 || i >= n || j >= n || i == j ||
        !is_subset(un.space, un.opens[i], un.opens[j]))
      throw BadConfiguration("inclusion keyed by a pair that is not a proper containment");
  }
  for (const auto& [key, map] : mult) {
    const auto [i, j] = key;
    if (i < 0 || j < 0 || i >= n || j >= n ||
        !is_disjoint(un.space, un.opens[i], un.opens[j]))
      throw BadConfiguration("multiplication keyed by a pair that is not disjoint");
    if (index_of(un, disjoint_union(un.space, un.opens[i], un.opens[j])) < 0)
      throw BadConfiguration("multiplication keyed by a pair whose union is not listed");
  }
  // transitive closure of the inclusion family, first composite wins
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<std::pair<Key, LinMap>> additions;
    for (const auto& [ij, mij] : incl) {
      for (const auto& [jk, mjk] : incl) {
        if (ij.second != jk.first) continue;
        const Key ik{ij.first, jk.second};
        if (incl.count(ik)) continue;
        additions.emplace_back(ik, compose(mjk, mij));
      }
    }
    for (auto& [key, map] : additions)
      if (incl.emplace(key, std::move(map)).second) grew = true;
  }
  // fill the swapped order of each listed multiplication
  {
    std::vector<std::pair<Key, LinMap>> additions;
    for (const auto& [key, mu] : mult) {
      const Key swapped{key.second, key.first};
      if (mult.count(swapped)) continue;
      additions.emplace_back(
          swapped, compose(mu, tensor_swap(values[key.second], values[key.first])));
    }
    for (auto& [key, map] : additions) mult.emplace(key, std::move(map));
  }
  PreFactAlg f{std::move(un), std::move(values), std::move(incl), std::move(mult),
               std::move(unit_empty)};
  const Report rep = check_coherence(f);
  if (!rep.ok)
    throw IncoherentDiagram(rep.code + ": " +
                            (rep.witnesses.empty() ? "" : rep.witnesses.front()));
  return f;
}

Report check_coherence(const PreFactAlg& f) {
  const StratSpace& sp = f.universe.space;
  const auto& opens = f.universe.opens;
  const int n = static_cast<int>(opens.size());
  auto fail = [](std::string code, std::string witness) {
    return Report{false, std::move(code), {std::move(witness)}};
  };
  if (static_cast<int>(f.values.size()) != n)
    return fail("structure", "value count differs from the universe size");
  const int e = empty_index(f.universe);
  if (e >= 0 && !f.unit_empty)
    return fail("structure", "the empty open is listed but carries no unit");
  if (e < 0 && f.unit_empty)
    return fail("structure", "a unit is given but the empty open is not listed");
  if (f.unit_empty && (f.unit_empty->src.dim != 1 || f.unit_empty->dst.dim != f.values[e].dim))
    return fail("structure", "the unit map has the wrong shape");
  for (const auto& [key, map] : f.incl) {
    const auto [i, j] = key;
    if (i < 0 || j < 0 || i >= n || j >= n || i == j ||
        !is_subset(sp, opens[i], opens[j]))
      return fail("structure", "inclusion keyed by a pair that is not a proper containment");
  }
  for (const auto& [key, map] : f.mult) {
    const auto [i, j] = key;
    if (i < 0 || j < 0 || i >= n || j >= n || !is_disjoint(sp, opens[i], opens[j]))
      return fail("structure", "multiplication keyed by a pair that is not disjoint");
    if (index_of(f.universe, disjoint_union(sp, opens[i], opens[j])) < 0)
      return fail("structure", "multiplication keyed by a pair whose union is not listed");
  }
  // presence and shapes of all inclusions
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || !is_subset(sp, opens[i], opens[j])) continue;
      auto it = f.incl.find({i, j});
      if (it == f.incl.end())
        return fail("missing-inclusion",
                    open_to_string(opens[i]) + " into " + open_to_string(opens[j]));
      if (it->second.src.dim != f.values[i].dim || it->second.dst.dim != f.values[j].dim)
        return fail("inclusion-shape",
                    open_to_string(opens[i]) + " into " + open_to_string(opens[j]));
    }
  }
  // functoriality over all listed triples
  for (const auto& [ij, mij] : f.incl) {
    for (const auto& [jk, mjk] : f.incl) {
      if (ij.second != jk.first) continue;
      const auto it = f.incl.find({ij.first, jk.second});
      if (it == f.incl.end())
        return fail("missing-inclusion", "transitive pair is unlisted");
      if (!(compose(mjk, mij) == it->second))
        return fail("inclusion-functoriality",
                    open_to_string(opens[ij.first]) + " through " +
                        open_to_string(opens[ij.second]) + " into " +
                        open_to_string(opens[jk.second]));
    }
  }
  // union table: -2 not disjoint, -1 union unlisted
  std::vector<std::vector<int>> uni(n, std::vector<int>(n, -2));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (!is_disjoint(sp, opens[i], opens[j])) continue;
      uni[i][j] = index_of(f.universe, disjoint_union(sp, opens[i], opens[j]));
    }
  // presence and shapes of all multiplications
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (uni[i][j] < 0) continue;
      auto it = f.mult.find({i, j});
      if (it == f.mult.end())
        return fail("missing-multiplication",
                    open_to_string(opens[i]) + " with " + open_to_string(opens[j]));
      if (it->second.src.dim != f.values[i].dim * f.values[j].dim ||
          it->second.dst.dim != f.values[uni[i][j]].dim)
        return fail("multiplication-shape",
                    open_to_string(opens[i]) + " with " + open_to_string(opens[j]));
    }
  }
  // symmetry under the tensor swap
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (uni[i][j] < 0) continue;
      if (!(f.mult.at({j, i}) ==
            compose(f.mult.at({i, j}), tensor_swap(f.values[j], f.values[i]))))
        return fail("multiplication-symmetry",
                    open_to_string(opens[i]) + " with " + open_to_string(opens[j]));
    }
  }
  // naturality in each slot
  for (const auto& [key, mu] : f.mult) {
    const auto [i, j] = key;
    const int k = uni[i][j];
    for (int i2 = 0; i2 < n; ++i2) {
      if (i2 == i || !is_subset(sp, opens[i], opens[i2])) continue;
      const int k2 = uni[i2][j];
      if (k2 < 0) continue;
      const LinMap lhs =
          compose(f.mult.at({i2, j}), tensor(f.incl.at({i, i2}), LinMap::identity(f.values[j])));
      const LinMap rhs = k == k2 ? mu : compose(f.incl.at({k, k2}), mu);
      if (!(lhs == rhs))
        return fail("multiplication-naturality",
                    open_to_string(opens[i]) + " into " + open_to_string(opens[i2]) +
                        " beside " + open_to_string(opens[j]));
    }
    for (int j2 = 0; j2 < n; ++j2) {
      if (j2 == j || !is_subset(sp, opens[j], opens[j2])) continue;
      const int k2 = uni[i][j2];
      if (k2 < 0) continue;
      const LinMap lhs =
          compose(f.mult.at({i, j2}), tensor(LinMap::identity(f.values[i]), f.incl.at({j, j2})));
      const LinMap rhs = k == k2 ? mu : compose(f.incl.at({k, k2}), mu);
      if (!(lhs == rhs))
        return fail("multiplication-naturality",
                    open_to_string(opens[j]) + " into " + open_to_string(opens[j2]) +
                        " beside " + open_to_string(opens[i]));
    }
  }
  // associativity over all listed ternary routes
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (uni[i][j] < 0) continue;
      const int a = uni[i][j];
      for (int k = 0; k < n; ++k) {
        if (uni[a][k] < 0 || uni[j][k] < 0) continue;
        const int b = uni[j][k];
        if (uni[i][b] < 0) continue;
        const LinMap lhs =
            compose(f.mult.at({a, k}), tensor(f.mult.at({i, j}), LinMap::identity(f.values[k])));
        const LinMap rhs =
            compose(f.mult.at({i, b}), tensor(LinMap::identity(f.values[i]), f.mult.at({j, k})));
        if (!(lhs == rhs))
          return fail("multiplication-associativity",
                      open_to_string(opens[i]) + ", " + open_to_string(opens[j]) + ", " +
                          open_to_string(opens[k]));
      }
    }
  }
  // unit laws at the empty open
  if (e >= 0) {
    const VectObj q = VectObj::unit();
    for (int i = 0; i < n; ++i) {
      if (uni[e][i] < 0) continue;
      const LinMap id = LinMap::identity(f.values[i]);
      if (!(compose(f.mult.at({e, i}), tensor(*f.unit_empty, id)) ==
            LinMap::identity_reshaped(tensor(q, f.values[i]), f.values[i])))
        return fail("unit-law", "left unit against " + open_to_string(opens[i]));
      if (!(compose(f.mult.at({i, e}), tensor(id, *f.unit_empty)) ==
            LinMap::identity_reshaped(tensor(f.values[i], q), f.values[i])))
        return fail("unit-law", "right unit against " + open_to_string(opens[i]));
    }
  }
  return Report{true, "", {}};
}

LinMap inclusion_map(const PreFactAlg& f, const OpenSet& u, const OpenSet& v) {
  const int i = open_index(f.universe, u);
  const int j = open_index(f.universe, v);
  if (i == j) return LinMap::identity(f.values[i]);
  if (!is_subset(f.universe.space, u, v))
    throw NotContained("open is not contained in the target: " + open_to_string(u));
  return f.incl.at({i, j});
}

LinMap structure_map(const PreFactAlg& f, const OMorphism& alpha) {
  if (!is_active(alpha)) throw BadConfiguration("structure maps need active morphisms");
  const StratSpace& sp = f.universe.space;
  std::vector<int> sidx, didx;
  for (const OpenSet& u : alpha.src.opens) sidx.push_back(open_index(f.universe, u));
  for (const OpenSet& v : alpha.dst.opens) didx.push_back(open_index(f.universe, v));
  const int e = empty_index(f.universe);
  std::vector<LinMap> slots;
  std::vector<int> global_order;
  for (int j = 0; j < static_cast<int>(didx.size()); ++j) {
    std::vector<int> fiber;
    for (int p = 0; p < static_cast<int>(sidx.size()); ++p)
      if (alpha.map[p] == j) fiber.push_back(p);
    if (fiber.empty()) {
      if (e < 0 || !f.unit_empty)
        throw BadConfiguration("nullary operation needs the empty open listed");
      slots.push_back(didx[j] == e ? *f.unit_empty
                                   : compose(f.incl.at({e, didx[j]}), *f.unit_empty));
      continue;
    }
    if (fiber.size() == 1) {
      const int p = fiber[0];
      slots.push_back(sidx[p] == didx[j]
                          ? LinMap::identity(f.values[sidx[p]])
                          : f.incl.at({sidx[p], didx[j]}));
      global_order.push_back(p);
      continue;
    }
    // route search: fold the fiber through listed binary multiplications
    auto try_order = [&](const std::vector<int>& order) -> std::optional<LinMap> {
      int cur = sidx[order[0]];
      OpenSet cur_open = f.universe.opens[cur];
      LinMap acc = LinMap::identity(f.values[cur]);
      bool first = true;
      for (int t = 1; t < static_cast<int>(order.size()); ++t) {
        const int nxt = sidx[order[t]];
        if (!f.mult.count({cur, nxt})) return std::nullopt;
        const OpenSet w = disjoint_union(sp, cur_open, f.universe.opens[nxt]);
        const int wi = index_of(f.universe, w);
        if (wi < 0) return std::nullopt;
        const LinMap step = f.mult.at({cur, nxt});
        acc = first ? step : compose(step, tensor(acc, LinMap::identity(f.values[nxt])));
        first = false;
        cur = wi;
        cur_open = w;
      }
      if (cur != didx[j]) acc = compose(f.incl.at({cur, didx[j]}), acc);
      return acc;
    };
    std::optional<LinMap> slot = try_order(fiber);
    std::vector<int> chosen = fiber;
    if (!slot) {
      std::vector<int> order = fiber;
      std::sort(order.begin(), order.end());
      do {
        slot = try_order(order);
        if (slot) {
          chosen = order;
          break;
        }
      } while (std::next_permutation(order.begin(), order.end()));
    }
    if (!slot)
      throw BadConfiguration("no listed multiplication route into " +
                             open_to_string(alpha.dst.opens[j]));
    slots.push_back(*slot);
    global_order.insert(global_order.end(), chosen.begin(), chosen.end());
  }
  std::vector<VectObj> src_factors;
  for (int p : sidx) src_factors.push_back(f.values[p]);
  return compose(tensor_many_maps(slots), factor_permutation(src_factors, global_order));
}

bool prefact_equal(const PreFactAlg& a, const PreFactAlg& b) {
  if (!(a.universe.space == b.universe.space)) return false;
  if (!(a.universe.opens == b.universe.opens)) return false;
  if (a.values.size() != b.values.size()) return false;
  for (int i = 0; i < static_cast<int>(a.values.size()); ++i)
    if (a.values[i].dim != b.values[i].dim) return false;
  if (!(a.incl == b.incl) || !(a.mult == b.mult)) return false;
  if (a.unit_empty.has_value() != b.unit_empty.has_value()) return false;
  if (a.unit_empty && !(*a.unit_empty == *b.unit_empty)) return false;
  return true;
}

PreFactAlg from_interval_algebra(const Algebra& a, const StratSpace& space,
                                 const Universe& un) {
  validate_algebra(a);
  if (!(un.space == space)) throw BadConfiguration("universe lives on a different space");
  require_unmarked_multidisks(space, un);
  PieceModel model;
  model.carrier = [&](const Piece&) { return a.carrier; };
  model.slot = [&](const std::vector<Piece>& fiber, const Piece&) {
    return fold_mult(a, static_cast<int>(fiber.size()));
  };
  return standard_prefact(un, model);
}

PreFactAlg from_bimodule(const Bimodule& m, const StratSpace& space, const Universe& un) {
  if (!m.point) throw MissingPoint("the bimodule carries no pointing");
  make_bimodule(m.left, m.right, m.carrier, m.action, m.point);
  if (!(un.space == space)) throw BadConfiguration("universe lives on a different space");
  if (space.components.size() != 1 ||
      !std::holds_alternative<StarComp>(space.components[0]) ||
      std::get<StarComp>(space.components[0]).rays != 2)
    throw BadConfiguration("the bimodule realization needs a line with a single mark");
  // On the canonical 2-ray star, ray 0 runs leftward from the mark, so its
  // far-to-near fold multiplies in ascending line order; ray 1 runs rightward
  // and needs the opposite algebra to do the same.
  const ConeData d{{m.left, opposite_algebra(m.right)},
                   m.carrier,
                   *m.point,
                   compose(m.action,
                           factor_permutation(
                               {m.left.carrier, m.right.carrier, m.carrier}, {0, 2, 1}))};
  return standard_star_prefact(d, un);
}

Report check_multiplicativity(const PreFactAlg& f) {
  Report rep{true, "", {}};
  const auto& opens = f.universe.opens;
  for (const auto& [key, mu] : f.mult) {
    if (key.first > key.second) continue;
    if (!is_iso(mu)) {
      rep.ok = false;
      rep.code = "multiplicativity";
      rep.witnesses.push_back(open_to_string(opens[key.first]) + " with " +
                              open_to_string(opens[key.second]));
    }
  }
  if (f.unit_empty && !is_iso(*f.unit_empty)) {
    rep.ok = false;
    rep.code = "multiplicativity";
    rep.witnesses.push_back("unit at the empty open");
  }
  return rep;
}

namespace {

// Constructibility sweep: inclusions certified as abstract isomorphisms of
// stratified multidisks must be sent to linear isomorphisms. `required`
// overrides the certificate for pairs inside a declared scope.
Report constructibility_sweep(const PreFactAlg& f, const std::vector<int>& targets,
                              bool declared) {
  const StratSpace& sp = f.universe.space;
  const auto& opens = f.universe.opens;
  Report rep{true, "", {}};
  std::set<int> target_set(targets.begin(), targets.end());
  for (const auto& [key, map] : f.incl) {
    const auto [i, j] = key;
    if (!target_set.count(i) || !target_set.count(j)) continue;
    bool required;
    if (declared) {
      required = true;
    } else {
      try {
        required = is_iso_inclusion(sp, opens[i], opens[j]);
      } catch (const NotDisks&) {
        continue;
      }
    }
    if (required && !is_iso(map)) {
      rep.ok = false;
      rep.code = "constructibility";
      rep.witnesses.push_back(open_to_string(opens[i]) + " into " +
                              open_to_string(opens[j]));
    }
  }
  return rep;
}

}  // namespace

Report check_constructible(const PreFactAlg& f) {
  std::vector<int> all(f.universe.opens.size());
  std::iota(all.begin(), all.end(), 0);
  return constructibility_sweep(f, all, false);
}

Report check_constructible(const PreFactAlg& f, const std::vector<OpenSet>& scope) {
  std::vector<int> targets;
  for (const OpenSet& u : scope) targets.push_back(open_index(f.universe, u));
  return constructibility_sweep(f, targets, true);
}

Report check_constructible_local(const PreFactAlg& f, const std::vector<OpenSet>& cover) {
  const StratSpace& sp = f.universe.space;
  for (const OpenSet& w : cover) {
    std::vector<int> inside;
    for (int i = 0; i < static_cast<int>(f.universe.opens.size()); ++i)
      if (is_subset(sp, f.universe.opens[i], w)) inside.push_back(i);
    Report local = constructibility_sweep(f, inside, false);
    if (!local.ok) {
      local.code = "local";
      return local;
    }
  }
  Report global = check_constructible(f);
  if (!global.ok) {
    global.code = "local-global-mismatch";
    return global;
  }
  return Report{true, "", {}};
}

namespace {

// Colimit over the punctured cube of intersections of a cover, computed
// within f; every intersection must be listed.
struct CubeColimit {
  VectObj obj;
  std::vector<LinMap> legs;    // one per nonempty mask, mask order
  std::vector<int> vidx;       // listed index per mask (entry 0 unused)
  std::vector<OpenSet> vopen;  // intersection per mask (entry 0 unused)
};

CubeColimit cube_colimit(const PreFactAlg& f, const std::vector<OpenSet>& cover) {
  const StratSpace& sp = f.universe.space;
  const int k = static_cast<int>(cover.size());
  if (k == 0) throw BadConfiguration("precover is empty");
  if (k > 12) throw BadConfiguration("precover is too large");
  for (const OpenSet& c : cover) open_index(f.universe, c);
  const int masks = (1 << k) - 1;
  std::vector<OpenSet> vmask(masks + 1);
  std::vector<int> vidx(masks + 1, -1);
  for (int mask = 1; mask <= masks; ++mask) {
    const int low = mask & (-mask);
    const int bit = std::countr_zero(static_cast<unsigned>(mask));
    vmask[mask] = mask == low ? cover[bit] : intersect(sp, vmask[mask ^ low], cover[bit]);
    vidx[mask] = index_of(f.universe, vmask[mask]);
    if (vidx[mask] < 0)
      throw MissingIntersection("intersection is not listed: " + open_to_string(vmask[mask]));
  }
  // punctured cube: element mask-1, ordered by reverse inclusion of bit sets
  std::vector<std::pair<int, int>> rels;
  for (int mask = 1; mask <= masks; ++mask)
    for (int b = 0; b < k; ++b)
      if (!(mask & (1 << b))) rels.emplace_back((mask | (1 << b)) - 1, mask - 1);
  const FinPoset base(masks, rels);
  std::vector<VectObj> fibers(masks);
  for (int mask = 1; mask <= masks; ++mask) fibers[mask - 1] = f.values[vidx[mask]];
  std::map<std::pair<int, int>, LinMap> transports;
  for (const auto& [a, b] : base.hasse())
    transports.emplace(std::make_pair(a, b), inclusion_map(f, vmask[a + 1], vmask[b + 1]));
  PosetColimit colim = poset_colimit(base, fibers, transports);
  return CubeColimit{colim.obj, std::move(colim.cocone), std::move(vidx), std::move(vmask)};
}

}  // namespace

PrecoverValue evaluate_on_precover(const PreFactAlg& f, const std::vector<OpenSet>& cover,
                                   const OpenSet& u) {
  const StratSpace& sp = f.universe.space;
  const int ui = open_index(f.universe, u);
  for (const OpenSet& c : cover)
    if (!is_subset(sp, c, u))
      throw BadConfiguration("precover member is not contained in the target open");
  CubeColimit cube = cube_colimit(f, cover);
  std::vector<LinMap> into_u;
  for (int mask = 1; mask < static_cast<int>(cube.vopen.size()); ++mask)
    into_u.push_back(inclusion_map(f, cube.vopen[mask], u));
  auto cmp = factor_through_surjection(hcat(cube.legs, cube.obj),
                                       hcat(into_u, f.values[ui]));
  if (!cmp) throw IncoherentDiagram("cover legs do not factor through the colimit");
  return PrecoverValue{cube.obj, std::move(cube.legs), *cmp};
}

Report check_weiss_descent(const PreFactAlg& f, const std::vector<OpenSet>& cover,
                           const OpenSet& u) {
  const PrecoverValue pv = evaluate_on_precover(f, cover, u);
  if (is_iso(pv.comparison)) return Report{true, "", {}};
  return Report{false, "weiss-descent",
                {"comparison has rank " + std::to_string(rank(pv.comparison.matrix)) +
                 " between dimensions " + std::to_string(pv.comparison.src.dim) + " and " +
                 std::to_string(pv.comparison.dst.dim)}};
}

Report check_weiss_chain(const PreFactAlg& f, const std::vector<OpenSet>& chain,
                         const OpenSet& u) {
  const StratSpace& sp = f.universe.space;
  const int ui = open_index(f.universe, u);
  if (chain.empty()) throw BadConfiguration("chain is empty");
  for (const OpenSet& c : chain) {
    open_index(f.universe, c);
    if (!is_subset(sp, c, u))
      throw BadConfiguration("chain member is not contained in the target open");
  }
  for (int t = 0; t + 1 < static_cast<int>(chain.size()); ++t)
    if (!is_subset(sp, chain[t], chain[t + 1]))
      throw BadConfiguration("chain is not ascending");
  // explicit cofinality certificate over the proper sieve of u
  for (int i = 0; i < static_cast<int>(f.universe.opens.size()); ++i) {
    if (i == ui || !is_subset(sp, f.universe.opens[i], u)) continue;
    bool below = false;
    for (const OpenSet& c : chain)
      if (is_subset(sp, f.universe.opens[i], c)) {
        below = true;
        break;
      }
    if (!below)
      throw ChainNotCofinal("listed open escapes the chain: " +
                            open_to_string(f.universe.opens[i]));
  }
  if (chain.size() >= 2) {
    const LinMap last =
        inclusion_map(f, chain[chain.size() - 2], chain[chain.size() - 1]);
    if (!is_iso(last))
      return Report{false, "not-stabilized",
                    {"final step " + open_to_string(chain[chain.size() - 2]) + " into " +
                     open_to_string(chain[chain.size() - 1]) + " is not invertible"}};
  }
  if (!is_iso(inclusion_map(f, chain.back(), u)))
    return Report{false, "weiss-chain",
                  {"stabilized value does not match " + open_to_string(u)}};
  return Report{true, "", {}};
}

PreFactAlg restrict_to(const PreFactAlg& f, const OpenSet& w) {
  const StratSpace& sp = f.universe.space;
  std::vector<int> keep;
  for (int i = 0; i < static_cast<int>(f.universe.opens.size()); ++i)
    if (is_subset(sp, f.universe.opens[i], w)) keep.push_back(i);
  std::vector<OpenSet> opens;
  std::vector<VectObj> values;
  std::vector<int> to_new(f.universe.opens.size(), -1);
  for (int t = 0; t < static_cast<int>(keep.size()); ++t) {
    to_new[keep[t]] = t;
    opens.push_back(f.universe.opens[keep[t]]);
    values.push_back(f.values[keep[t]]);
  }
  std::map<Key, LinMap> incl, mult;
  for (const auto& [key, map] : f.incl)
    if (to_new[key.first] >= 0 && to_new[key.second] >= 0)
      incl.emplace(Key{to_new[key.first], to_new[key.second]}, map);
  for (const auto& [key, map] : f.mult) {
    if (to_new[key.first] < 0 || to_new[key.second] < 0) continue;
    const OpenSet du =
        disjoint_union(sp, f.universe.opens[key.first], f.universe.opens[key.second]);
    if (!is_subset(sp, du, w)) continue;
    mult.emplace(Key{to_new[key.first], to_new[key.second]}, map);
  }
  std::optional<LinMap> unit;
  if (f.unit_empty) unit = f.unit_empty;  // the empty open survives any restriction
  return make_prefact(Universe(sp, std::move(opens)), std::move(values), std::move(incl),
                      std::move(mult), std::move(unit));
}

PreFactAlg pushforward(const PreFactAlg& f, const MapDescriptor& p, const Universe& target) {
  if (!(p.source == f.universe.space))
    throw BadConfiguration("map source differs from the algebra's space");
  if (!(p.target == target.space))
    throw BadConfiguration("map target differs from the requested universe");
  const int n = static_cast<int>(target.opens.size());
  std::vector<int> pre(n, -1);
  for (int j = 0; j < n; ++j) {
    const OpenSet pj = preimage(p, target.opens[j]);
    pre[j] = index_of(f.universe, pj);
    if (pre[j] < 0)
      throw PreimageUnlisted("preimage of " + open_to_string(target.opens[j]) +
                             " is not listed: " + open_to_string(pj));
  }
  std::vector<VectObj> values(n);
  for (int j = 0; j < n; ++j) values[j] = f.values[pre[j]];
  std::map<Key, LinMap> incl, mult;
  const StratSpace& tsp = target.space;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || !is_subset(tsp, target.opens[i], target.opens[j])) continue;
      incl.emplace(Key{i, j}, inclusion_map(f, f.universe.opens[pre[i]],
                                            f.universe.opens[pre[j]]));
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (!is_disjoint(tsp, target.opens[i], target.opens[j])) continue;
      if (index_of(target, disjoint_union(tsp, target.opens[i], target.opens[j])) < 0)
        continue;
      mult.emplace(Key{i, j}, f.mult.at({pre[i], pre[j]}));
    }
  std::optional<LinMap> unit;
  const int te = empty_index(target);
  if (te >= 0) {
    if (!f.unit_empty) throw PreimageUnlisted("preimage of the empty open carries no unit");
    unit = f.unit_empty;
  }
  return make_prefact(target, std::move(values), std::move(incl), std::move(mult),
                      std::move(unit));
}

PreFactAlg tensor_product(const PreFactAlg& f, const PreFactAlg& g) {
  if (!(f.universe.space == g.universe.space) || !(f.universe.opens == g.universe.opens))
    throw UniverseMismatch("tensor product needs identical universes");
  const int n = static_cast<int>(f.universe.opens.size());
  std::vector<VectObj> values(n);
  for (int i = 0; i < n; ++i) values[i] = tensor(f.values[i], g.values[i]);
  std::map<Key, LinMap> incl, mult;
  for (const auto& [key, map] : f.incl)
    incl.emplace(key, tensor(map, g.incl.at(key)));
  for (const auto& [key, map] : f.mult) {
    const auto [i, j] = key;
    const LinMap interchange = factor_permutation(
        {f.values[i], g.values[i], f.values[j], g.values[j]}, {0, 2, 1, 3});
    mult.emplace(key, compose(tensor(map, g.mult.at(key)), interchange));
  }
  std::optional<LinMap> unit;
  if (f.unit_empty) {
    const VectObj q = VectObj::unit();
    unit = compose(tensor(*f.unit_empty, *g.unit_empty),
                   LinMap::identity_reshaped(q, tensor(q, q)));
  }
  return make_prefact(f.universe, std::move(values), std::move(incl), std::move(mult),
                      std::move(unit));
}

PreFactAlg extend_from_basis(const PreFactAlg& f, const Universe& ambient,
                             const std::vector<ExtensionDeclaration>& decls, int grid) {
  const StratSpace& sp = f.universe.space;
  if (!(ambient.space == sp))
    throw BadConfiguration("ambient universe lives on a different space");
  for (const OpenSet& u : f.universe.opens)
    if (index_of(ambient, u) < 0)
      throw BadConfiguration("basis open is not listed in the ambient universe: " +
                             open_to_string(u));
  const PredicateReport pred = basis_predicate(f.universe, ambient, BasisMode::factorizing, grid);
  if (!pred.ok) throw NotFactorizing(pred.witness);
  const Report mrep = check_multiplicativity(f);
  if (!mrep.ok)
    throw BadConfiguration("basis algebra is not multiplicative: " +
                           (mrep.witnesses.empty() ? "" : mrep.witnesses.front()));
  const int ae = empty_index(ambient);
  const int fe = empty_index(f.universe);
  if (ae >= 0 && fe < 0) {
    std::vector<OpenSet> trimmed;
    for (int i = 0; i < static_cast<int>(ambient.opens.size()); ++i)
      if (i != ae) trimmed.push_back(ambient.opens[i]);
    return adjoin_empty(extend_from_basis(f, Universe(sp, std::move(trimmed)), decls, grid));
  }
  const bool constructible = check_constructible(f).ok;
  const int n = static_cast<int>(ambient.opens.size());
  std::vector<int> bidx(n, -1);
  for (int i = 0; i < n; ++i) bidx[i] = index_of(f.universe, ambient.opens[i]);
  const int nb = static_cast<int>(f.universe.opens.size());
  std::vector<VectObj> values(n);
  std::vector<std::vector<int>> sieves(n);   // basis indices inside each new open
  std::vector<std::vector<LinMap>> chis(n);  // comparisons f(sieve[t]) -> value
  std::vector<std::vector<int>> pos(n);      // basis index -> sieve position
  for (int i = 0; i < n; ++i) {
    if (bidx[i] >= 0) {
      values[i] = f.values[bidx[i]];
      continue;
    }
    const OpenSet& u = ambient.opens[i];
    std::vector<int>& sieve = sieves[i];
    for (int b = 0; b < nb; ++b)
      if (is_subset(sp, f.universe.opens[b], u)) sieve.push_back(b);
    if (sieve.empty()) throw NotFactorizing("no basis opens inside " + open_to_string(u));
    const int sn = static_cast<int>(sieve.size());
    pos[i].assign(nb, -1);
    for (int t = 0; t < sn; ++t) pos[i][sieve[t]] = t;
    const auto sopen = [&](int t) -> const OpenSet& { return f.universe.opens[sieve[t]]; };
    const auto smap = [&](int t, int t2) { return inclusion_map(f, sopen(t), sopen(t2)); };
    std::vector<std::vector<bool>> sub(sn, std::vector<bool>(sn, false));
    for (int t = 0; t < sn; ++t)
      for (int t2 = 0; t2 < sn; ++t2)
        sub[t][t2] = t != t2 && is_subset(sp, sopen(t), sopen(t2));
    std::vector<std::optional<LinMap>> chi(sn);
    // certified candidates: listed sub-multidisks abstractly isomorphic to u
    std::vector<int> cands;
    if (constructible && classify_multidisk(sp, u)) {
      for (int t = 0; t < sn; ++t) {
        bool cert = false;
        try {
          cert = is_iso_inclusion(sp, sopen(t), u);
        } catch (const NotDisks&) {
        }
        if (cert) cands.push_back(t);
      }
    }
    const ExtensionDeclaration* decl = nullptr;
    for (const ExtensionDeclaration& d : decls)
      if (d.open == u) {
        decl = &d;
        break;
      }
    const bool shortcut = !cands.empty();
    if (shortcut) {
      // value := f at the first candidate; the other candidates join through
      // listed overlaps, so the choice is verified rather than averaged
      values[i] = f.values[sieve[cands[0]]];
      chi[cands[0]] = LinMap::identity(values[i]);
      bool grew = true;
      while (grew) {
        grew = false;
        for (int c : cands) {
          if (!chi[c]) continue;
          for (int c2 : cands) {
            if (chi[c2]) continue;
            const OpenSet inter = intersect(sp, sopen(c), sopen(c2));
            if (is_empty(inter) || index_of(f.universe, inter) < 0) continue;
            const LinMap into2 = inclusion_map(f, inter, sopen(c2));
            if (!is_iso(into2)) continue;
            chi[c2] = compose(compose(*chi[c], inclusion_map(f, inter, sopen(c))),
                              inverse_of(into2));
            grew = true;
          }
        }
      }
    } else if (decl) {
      for (const OpenSet& w : decl->weiss_family)
        if (!is_subset(sp, w, u))
          throw BadConfiguration("declared family member is not inside its open: " +
                                 open_to_string(w));
      CubeColimit cube = cube_colimit(f, decl->weiss_family);
      values[i] = cube.obj;
      for (int mask = 1; mask < static_cast<int>(cube.vidx.size()); ++mask) {
        const int t = pos[i][cube.vidx[mask]];
        if (!chi[t]) chi[t] = cube.legs[mask - 1];
      }
    } else {
      throw NotFactorizing(
          "no abstractly isomorphic basis open and no declared family inside " +
          open_to_string(u));
    }
    // propagate: down along restrictions, up along invertible inclusions
    bool grew = true;
    while (grew) {
      grew = false;
      for (int t = 0; t < sn; ++t)
        for (int t2 = 0; t2 < sn; ++t2) {
          if (!sub[t][t2]) continue;
          if (chi[t2] && !chi[t]) {
            chi[t] = compose(*chi[t2], smap(t, t2));
            grew = true;
          } else if (chi[t] && !chi[t2]) {
            const LinMap m = smap(t, t2);
            if (!is_iso(m)) continue;
            chi[t2] = compose(*chi[t], inverse_of(m));
            grew = true;
          }
        }
    }
    for (int t = 0; t < sn; ++t)
      if (!chi[t])
        throw NotFactorizing("no comparison route for " + open_to_string(sopen(t)) +
                             " inside " + open_to_string(u));
    for (int t = 0; t < sn; ++t)
      for (int t2 = 0; t2 < sn; ++t2) {
        if (!sub[t][t2] || *chi[t] == compose(*chi[t2], smap(t, t2))) continue;
        const std::string msg = "comparisons disagree between " + open_to_string(sopen(t)) +
                                " and " + open_to_string(sopen(t2)) + " inside " +
                                open_to_string(u);
        if (shortcut) throw ShortcutChoiceDependent(msg);
        throw NotFactorizing(msg);
      }
    for (int c : cands)
      if (!is_iso(*chi[c]))
        throw ShortcutChoiceDependent("candidate " + open_to_string(sopen(c)) +
                                      " does not present the value inside " +
                                      open_to_string(u));
    chis[i].reserve(sn);
    for (int t = 0; t < sn; ++t) chis[i].push_back(std::move(*chi[t]));
  }
  // leg of a basis open into any ambient open containing it
  auto leg = [&](int b, int j) -> LinMap {
    if (bidx[j] >= 0)
      return b == bidx[j] ? LinMap::identity(f.values[b]) : f.incl.at({b, bidx[j]});
    return chis[j][pos[j][b]];
  };
  std::map<Key, LinMap> incl;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || !is_subset(sp, ambient.opens[i], ambient.opens[j])) continue;
      if (bidx[i] >= 0) {
        incl.emplace(Key{i, j}, leg(bidx[i], j));
        continue;
      }
      std::vector<LinMap> gens;
      for (int b : sieves[i]) gens.push_back(leg(b, j));
      auto h = factor_through_surjection(hcat(chis[i], values[i]), hcat(gens, values[j]));
      if (!h) throw IncoherentDiagram("extension legs do not factor through the presentation");
      incl.emplace(Key{i, j}, *h);
    }
  }
  std::map<Key, LinMap> mult;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!is_disjoint(sp, ambient.opens[i], ambient.opens[j])) continue;
      const OpenSet w = disjoint_union(sp, ambient.opens[i], ambient.opens[j]);
      const int k = index_of(ambient, w);
      if (k < 0) continue;
      if (bidx[i] >= 0 && bidx[j] >= 0 && bidx[k] >= 0) {
        mult.emplace(Key{i, j}, f.mult.at({bidx[i], bidx[j]}));
        continue;
      }
      const std::vector<int> gens_i =
          bidx[i] >= 0 ? std::vector<int>{bidx[i]} : sieves[i];
      const std::vector<int> gens_j =
          bidx[j] >= 0 ? std::vector<int>{bidx[j]} : sieves[j];
      const LinMap pi =
          bidx[i] >= 0 ? LinMap::identity(values[i]) : hcat(chis[i], values[i]);
      const LinMap pj =
          bidx[j] >= 0 ? LinMap::identity(values[j]) : hcat(chis[j], values[j]);
      Matrix gmat(values[k].dim, std::vector<Rat>(pi.src.dim * pj.src.dim, Rat(0)));
      int off_b = 0;
      for (int b : gens_i) {
        const int db = f.values[b].dim;
        int off_b2 = 0;
        for (int b2 : gens_j) {
          const int db2 = f.values[b2].dim;
          const OpenSet wb = disjoint_union(sp, f.universe.opens[b], f.universe.opens[b2]);
          const int wbi = index_of(f.universe, wb);
          if (wbi < 0)
            throw NotFactorizing("basis is not closed under the disjoint union of " +
                                 open_to_string(f.universe.opens[b]) + " and " +
                                 open_to_string(f.universe.opens[b2]));
          const LinMap gmap = compose(leg(wbi, k), f.mult.at({b, b2}));
          for (int r = 0; r < values[k].dim; ++r)
            for (int pp = 0; pp < db; ++pp)
              for (int qq = 0; qq < db2; ++qq)
                gmat[r][(off_b + pp) * pj.src.dim + (off_b2 + qq)] =
                    gmap.matrix[r][pp * db2 + qq];
          off_b2 += db2;
        }
        off_b += db;
      }
      const LinMap big = tensor(pi, pj);
      auto h = factor_through_surjection(
          big, LinMap(VectObj::with_dim(pi.src.dim * pj.src.dim, "s"), values[k],
                      std::move(gmat)));
      if (!h)
        throw IncoherentDiagram(
            "extension multiplication does not factor through the presentation");
      mult.emplace(Key{i, j}, *h);
    }
  }
  std::optional<LinMap> unit;
  if (fe >= 0) unit = f.unit_empty;
  PreFactAlg out = make_prefact(ambient, std::move(values), std::move(incl),
                                std::move(mult), std::move(unit));
  for (const ExtensionDeclaration& d : decls) {
    open_index(out.universe, d.open);
    if (d.weiss_family.empty())
      throw BadConfiguration("declared family is empty for " + open_to_string(d.open));
    const PrecoverValue pv = evaluate_on_precover(out, d.weiss_family, d.open);
    if (!is_iso(pv.comparison))
      throw NotFactorizing("declared family fails descent at " + open_to_string(d.open));
    if (!d.refinement.empty()) {
      for (const OpenSet& r : d.refinement) {
        bool below = false;
        for (const OpenSet& w : d.weiss_family)
          if (is_subset(sp, r, w)) {
            below = true;
            break;
          }
        if (!below)
          throw BadConfiguration("refinement member is not below the declared family: " +
                                 open_to_string(r));
      }
      const PrecoverValue pv2 = evaluate_on_precover(out, d.refinement, d.open);
      if (!is_iso(pv2.comparison))
        throw NotFactorizing("declared refinement fails descent at " + open_to_string(d.open));
    }
  }
  return out;
}

namespace {

// Decomposition of one listed open into listed blocks: a partition of its
// pieces plus the basis index of each block, in canonical block order.
struct Dec {
  EqRel rel;
  std::vector<int> block_open;  // indices into the basis universe
};

VectObj dec_value(const PreFactAlg& g, const Dec& d) {
  std::vector<VectObj> xs;
  for (int b : d.block_open) xs.push_back(g.values[b]);
  return tensor_many(xs);
}

// Comparison from a finer decomposition to a coarser one of the same open:
// per coarse block, the structure map assembling its finer blocks.
LinMap refine_leg(const PreFactAlg& g, const Dec& fine, const Dec& coarse) {
  const StratSpace& sp = g.universe.space;
  const int nf = fine.rel.num_blocks();
  const int nc = coarse.rel.num_blocks();
  std::vector<int> home(nf, -1);
  for (int p = 0; p < fine.rel.size(); ++p) home[fine.rel.block_of[p]] = coarse.rel.block_of[p];
  std::vector<LinMap> slots;
  std::vector<int> order;
  for (int c = 0; c < nc; ++c) {
    std::vector<int> fiber;
    for (int t = 0; t < nf; ++t)
      if (home[t] == c) fiber.push_back(t);
    std::vector<OpenSet> srcs;
    for (int t : fiber) srcs.push_back(g.universe.opens[fine.block_open[t]]);
    const OMorphism alpha =
        make_morphism(sp, OTuple{std::move(srcs)},
                      OTuple{{g.universe.opens[coarse.block_open[c]]}},
                      std::vector<int>(fiber.size(), 0));
    slots.push_back(structure_map(g, alpha));
    order.insert(order.end(), fiber.begin(), fiber.end());
  }
  std::vector<VectObj> facs;
  for (int b : fine.block_open) facs.push_back(g.values[b]);
  return compose(tensor_many_maps(slots), factor_permutation(facs, order));
}

}  // namespace

PreFactAlg extend_disjoint_completion(const PreFactAlg& f0, int grid) {
  {
    const PredicateReport pred =
        basis_predicate(f0.universe, f0.universe, BasisMode::decomposable, grid);
    if (!pred.ok) throw BadConfiguration("basis is not decomposable: " + pred.witness);
    const Report mrep = check_multiplicativity(f0);
    if (!mrep.ok)
      throw BadConfiguration("basis algebra is not multiplicative: " +
                             (mrep.witnesses.empty() ? "" : mrep.witnesses.front()));
  }
  const PreFactAlg g = empty_index(f0.universe) >= 0 ? f0 : adjoin_empty(f0);
  const StratSpace& sp = g.universe.space;
  const Universe closure = close_disjoint_unions(g.universe);
  const int n = static_cast<int>(closure.opens.size());
  const int ce = empty_index(closure);
  std::vector<int> gidx(n, -1);
  for (int i = 0; i < n; ++i) gidx[i] = index_of(g.universe, closure.opens[i]);
  std::vector<std::vector<Piece>> cpieces(n);
  for (int i = 0; i < n; ++i) cpieces[i] = connected_pieces(sp, closure.opens[i]);

  auto dec_from_morphism = [&](int i, const OMorphism& gamma) -> Dec {
    const int np = static_cast<int>(cpieces[i].size());
    std::vector<int> raw(np, -1);
    for (int p = 0; p < np; ++p) {
      const OpenSet po = piece_open(sp, cpieces[i][p]);
      for (int s = 0; s < static_cast<int>(gamma.src.opens.size()); ++s)
        if (is_subset(sp, po, gamma.src.opens[s])) {
          raw[p] = s;
          break;
        }
    }
    EqRel rel(raw);
    std::vector<int> block_open(rel.num_blocks(), -1);
    for (int p = 0; p < np; ++p)
      if (block_open[rel.block_of[p]] < 0)
        block_open[rel.block_of[p]] = index_of(g.universe, gamma.src.opens[raw[p]]);
    return Dec{std::move(rel), std::move(block_open)};
  };

  std::vector<Dec> dec(n);
  std::vector<std::vector<Dec>> candidates(n);
  for (int i = 0; i < n; ++i) {
    const int np = static_cast<int>(cpieces[i].size());
    if (gidx[i] >= 0) {
      if (np == 0) {
        dec[i] = Dec{EqRel(std::vector<int>{}), {}};
      } else {
        dec[i] = Dec{EqRel(std::vector<int>(np, 0)), {gidx[i]}};
      }
      continue;
    }
    const auto gammas = enumerate_cocart_into(sp, closure.opens[i], g.universe);
    for (const OMorphism& gamma : gammas) {
      if (gamma.src.opens.empty()) continue;  // nothing decomposes into the empty tuple
      candidates[i].push_back(dec_from_morphism(i, gamma));
    }
    if (candidates[i].empty())
      throw NoDecompositionListed("no listed decomposition of " +
                                  open_to_string(closure.opens[i]));
    dec[i] = candidates[i].front();
  }
  std::vector<VectObj> values(n);
  for (int i = 0; i < n; ++i)
    values[i] = gidx[i] >= 0 ? g.values[gidx[i]] : dec_value(g, dec[i]);

  auto meet_dec = [&](int i, const Dec& a, const Dec& b) -> Dec {
    const EqRel m = meet(a.rel, b.rel);
    std::vector<int> block_open(m.num_blocks(), -1);
    for (int blk = 0; blk < m.num_blocks(); ++blk) {
      std::vector<Piece> ps;
      for (int p = 0; p < m.size(); ++p)
        if (m.block_of[p] == blk) ps.push_back(cpieces[i][p]);
      const OpenSet bo = pieces_open(sp, ps);
      block_open[blk] = index_of(g.universe, bo);
      if (block_open[blk] < 0)
        throw NoDecompositionListed("common refinement block is not listed: " +
                                    open_to_string(bo));
    }
    return Dec{m, std::move(block_open)};
  };

  // independence across all enumerated decompositions of each new open
  for (int i = 0; i < n; ++i) {
    if (candidates[i].size() < 2) continue;
    auto psi = [&](const Dec& a, const Dec& b) -> LinMap {
      Dec m = meet_dec(i, a, b);
      try {
        const LinMap la = refine_leg(g, m, a);
        const LinMap lb = refine_leg(g, m, b);
        return compose(lb, inverse_of(la));
      } catch (const BadConfiguration& err) {
        throw NoDecompositionListed(err.what());
      }
    };
    std::vector<LinMap> to_first;
    for (const Dec& c : candidates[i]) to_first.push_back(psi(c, candidates[i][0]));
    for (int a = 0; a < static_cast<int>(candidates[i].size()); ++a)
      for (int b = a + 1; b < static_cast<int>(candidates[i].size()); ++b) {
        const LinMap direct = psi(candidates[i][a], candidates[i][b]);
        const LinMap via_first = compose(inverse_of(to_first[b]), to_first[a]);
        if (!(direct == via_first))
          throw ChoiceDependent("decomposition comparisons of " +
                                open_to_string(closure.opens[i]) + " do not commute");
      }
  }

  std::map<Key, LinMap> incl;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || !is_subset(sp, closure.opens[i], closure.opens[j])) continue;
      if (gidx[i] >= 0 && gidx[j] >= 0) {
        incl.emplace(Key{i, j}, g.incl.at({gidx[i], gidx[j]}));
        continue;
      }
      const std::vector<int> cont =
          piece_containment_map(sp, closure.opens[i], closure.opens[j]);
      // pull the target decomposition back and refine against our own
      std::vector<int> raw(cpieces[i].size());
      for (int p = 0; p < static_cast<int>(cpieces[i].size()); ++p)
        raw[p] = dec[j].rel.block_of[cont[p]];
      Dec pulled{EqRel(raw), {}};
      const EqRel mrel = meet(dec[i].rel, pulled.rel);
      Dec m{mrel, std::vector<int>(mrel.num_blocks(), -1)};
      for (int blk = 0; blk < mrel.num_blocks(); ++blk) {
        std::vector<Piece> ps;
        for (int p = 0; p < mrel.size(); ++p)
          if (mrel.block_of[p] == blk) ps.push_back(cpieces[i][p]);
        const OpenSet bo = pieces_open(sp, ps);
        m.block_open[blk] = index_of(g.universe, bo);
        if (m.block_open[blk] < 0)
          throw NoDecompositionListed("common refinement block is not listed: " +
                                      open_to_string(bo));
      }
      LinMap la;
      try {
        la = refine_leg(g, m, dec[i]);
      } catch (const BadConfiguration& err) {
        throw NoDecompositionListed(err.what());
      }
      // one slot per target block, allowing empty fibers through the unit
      std::vector<LinMap> slots;
      std::vector<int> order;
      for (int c = 0; c < dec[j].rel.num_blocks(); ++c) {
        std::vector<int> fiber;
        for (int t = 0; t < mrel.num_blocks(); ++t) {
          int piece = -1;
          for (int p = 0; p < mrel.size(); ++p)
            if (mrel.block_of[p] == t) {
              piece = p;
              break;
            }
          if (dec[j].rel.block_of[cont[piece]] == c) fiber.push_back(t);
        }
        std::vector<OpenSet> srcs;
        for (int t : fiber) srcs.push_back(g.universe.opens[m.block_open[t]]);
        const OMorphism alpha =
            make_morphism(sp, OTuple{std::move(srcs)},
                          OTuple{{g.universe.opens[dec[j].block_open[c]]}},
                          std::vector<int>(fiber.size(), 0));
        try {
          slots.push_back(structure_map(g, alpha));
        } catch (const BadConfiguration& err) {
          throw NoDecompositionListed(err.what());
        }
        order.insert(order.end(), fiber.begin(), fiber.end());
      }
      std::vector<VectObj> facs;
      for (int b : m.block_open) facs.push_back(g.values[b]);
      const LinMap lb =
          compose(tensor_many_maps(slots), factor_permutation(facs, order));
      LinMap map = compose(lb, inverse_of(la));
      if (i == ce) map = compose(map, inverse_of(*g.unit_empty));
      incl.emplace(Key{i, j}, std::move(map));
    }
  }

  std::map<Key, LinMap> mult;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!is_disjoint(sp, closure.opens[i], closure.opens[j])) continue;
      const OpenSet w = disjoint_union(sp, closure.opens[i], closure.opens[j]);
      const int k = index_of(closure, w);
      if (k < 0) continue;
      if (gidx[i] >= 0 && gidx[j] >= 0 && gidx[k] >= 0) {
        mult.emplace(Key{i, j}, g.mult.at({gidx[i], gidx[j]}));
        continue;
      }
      if (i == ce || j == ce) {
        // forced by the unit law
        const VectObj q = VectObj::unit();
        const LinMap inv_unit = inverse_of(*g.unit_empty);
        LinMap map =
            i == ce
                ? compose(LinMap::identity_reshaped(tensor(q, values[j]), values[j]),
                          tensor(inv_unit, LinMap::identity(values[j])))
                : compose(LinMap::identity_reshaped(tensor(values[i], q), values[i]),
                          tensor(LinMap::identity(values[i]), inv_unit));
        mult.emplace(Key{i, j}, std::move(map));
        continue;
      }
      // concatenate the two decompositions along the union's pieces
      const std::vector<int> mapu = piece_containment_map(sp, closure.opens[i], w);
      const std::vector<int> mapv = piece_containment_map(sp, closure.opens[j], w);
      const int nbi = dec[i].rel.num_blocks();
      std::vector<int> raw(cpieces[k].size(), -1);
      for (int p = 0; p < dec[i].rel.size(); ++p)
        raw[mapu[p]] = dec[i].rel.block_of[p];
      for (int p = 0; p < dec[j].rel.size(); ++p)
        raw[mapv[p]] = nbi + dec[j].rel.block_of[p];
      EqRel rrel(raw);
      std::vector<int> labels(rrel.num_blocks(), -1);
      for (int p = 0; p < static_cast<int>(raw.size()); ++p)
        if (labels[rrel.block_of[p]] < 0) labels[rrel.block_of[p]] = raw[p];
      Dec concat{rrel, std::vector<int>(rrel.num_blocks(), -1)};
      for (int blk = 0; blk < rrel.num_blocks(); ++blk)
        concat.block_open[blk] = labels[blk] < nbi
                                     ? dec[i].block_open[labels[blk]]
                                     : dec[j].block_open[labels[blk] - nbi];
      std::vector<VectObj> label_factors;
      for (int b : dec[i].block_open) label_factors.push_back(g.values[b]);
      for (int b : dec[j].block_open) label_factors.push_back(g.values[b]);
      const LinMap perm = factor_permutation(label_factors, labels);
      const Dec m = meet_dec(k, concat, dec[k]);
      try {
        const LinMap la = refine_leg(g, m, concat);
        const LinMap lb = refine_leg(g, m, dec[k]);
        mult.emplace(Key{i, j}, compose(lb, compose(inverse_of(la), perm)));
      } catch (const BadConfiguration& err) {
        throw NoDecompositionListed(err.what());
      }
    }
  }
  return make_prefact(closure, std::move(values), std::move(incl), std::move(mult),
                      g.unit_empty);
}

PreFactAlg strip_empty(const PreFactAlg& f) {
  const int e = empty_index(f.universe);
  if (e < 0) return f;
  std::vector<OpenSet> opens;
  std::vector<VectObj> values;
  std::vector<int> to_new(f.universe.opens.size(), -1);
  for (int i = 0; i < static_cast<int>(f.universe.opens.size()); ++i) {
    if (i == e) continue;
    to_new[i] = static_cast<int>(opens.size());
    opens.push_back(f.universe.opens[i]);
    values.push_back(f.values[i]);
  }
  std::map<Key, LinMap> incl, mult;
  for (const auto& [key, map] : f.incl)
    if (key.first != e && key.second != e)
      incl.emplace(Key{to_new[key.first], to_new[key.second]}, map);
  for (const auto& [key, map] : f.mult)
    if (key.first != e && key.second != e)
      mult.emplace(Key{to_new[key.first], to_new[key.second]}, map);
  return make_prefact(Universe(f.universe.space, std::move(opens)), std::move(values),
                      std::move(incl), std::move(mult), std::nullopt);
}

PreFactAlg adjoin_empty(const PreFactAlg& f) {
  if (empty_index(f.universe) >= 0) return f;
  const StratSpace& sp = f.universe.space;
  const OpenSet eo = empty_open(sp);
  const int old_n = static_cast<int>(f.universe.opens.size());
  std::vector<OpenSet> opens = f.universe.opens;
  opens.push_back(eo);
  Universe un2(sp, std::move(opens));
  const int e2 = index_of(un2, eo);
  std::vector<int> to_new(old_n, -1);
  for (int i = 0; i < old_n; ++i) to_new[i] = index_of(un2, f.universe.opens[i]);
  std::vector<VectObj> values(old_n + 1);
  values[e2] = VectObj::unit();
  for (int i = 0; i < old_n; ++i) values[to_new[i]] = f.values[i];
  std::map<Key, LinMap> incl, mult;
  for (const auto& [key, map] : f.incl)
    incl.emplace(Key{to_new[key.first], to_new[key.second]}, map);
  for (const auto& [key, map] : f.mult)
    mult.emplace(Key{to_new[key.first], to_new[key.second]}, map);
  const VectObj q = VectObj::unit();
  for (int i = 0; i < old_n; ++i) {
    mult.emplace(Key{e2, to_new[i]},
                 LinMap::identity_reshaped(tensor(q, f.values[i]), f.values[i]));
    mult.emplace(Key{to_new[i], e2},
                 LinMap::identity_reshaped(tensor(f.values[i], q), f.values[i]));
  }
  mult.emplace(Key{e2, e2}, LinMap::identity_reshaped(tensor(q, q), q));
  // derive each unit element map from an invertible multiplication partner
  std::vector<std::optional<LinMap>> unit_into(old_n);
  for (int j = 0; j < old_n; ++j) {
    for (const auto& [key, mu] : f.mult) {
      if (key.first != j || !is_iso(mu)) continue;
      const int z = key.second;
      const int dz = f.values[z].dim;
      if (dz == 0) continue;
      const OpenSet w = disjoint_union(sp, f.universe.opens[j], f.universe.opens[z]);
      const int wi = index_of(f.universe, w);
      const LinMap into =
          wi == z ? LinMap::identity(f.values[z]) : f.incl.at({z, wi});
      const LinMap s = compose(inverse_of(mu), into);
      std::vector<Rat> hat(f.values[j].dim);
      for (int r = 0; r < f.values[j].dim; ++r) hat[r] = s.matrix[r * dz][0];
      bool split = true;
      for (int r = 0; r < f.values[j].dim && split; ++r)
        for (int qq = 0; qq < dz && split; ++qq)
          for (int q2 = 0; q2 < dz && split; ++q2)
            if (!(s.matrix[r * dz + qq][q2] == (qq == q2 ? hat[r] : Rat(0)))) split = false;
      if (!split) continue;
      Matrix col(f.values[j].dim, std::vector<Rat>(1));
      for (int r = 0; r < f.values[j].dim; ++r) col[r][0] = hat[r];
      unit_into[j] = LinMap(q, f.values[j], std::move(col));
      break;
    }
  }
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& [key, map] : f.incl) {
      if (unit_into[key.second] || !unit_into[key.first]) continue;
      unit_into[key.second] = compose(map, *unit_into[key.first]);
      grew = true;
    }
  }
  for (int j = 0; j < old_n; ++j) {
    if (!unit_into[j])
      throw BadConfiguration("cannot derive the unit map into " +
                             open_to_string(f.universe.opens[j]));
    incl.emplace(Key{e2, to_new[j]}, *unit_into[j]);
  }
  return make_prefact(std::move(un2), std::move(values), std::move(incl), std::move(mult),
                      LinMap::identity(q));
}

PreFactAlg glue_from_cover(const std::vector<GluePiece>& pieces) {
  if (pieces.empty()) throw BadConfiguration("gluing needs at least one piece");
  const StratSpace& sp = pieces[0].alg.universe.space;
  for (const GluePiece& p : pieces) {
    if (!(p.alg.universe.space == sp))
      throw BadConfiguration("glue pieces live on different spaces");
    for (const OpenSet& u : p.alg.universe.opens)
      if (!is_subset(sp, u, p.open))
        throw BadConfiguration("piece universe is not contained in its open: " +
                               open_to_string(u));
  }
  std::vector<OpenSet> all;
  for (const GluePiece& p : pieces)
    all.insert(all.end(), p.alg.universe.opens.begin(), p.alg.universe.opens.end());
  Universe un(sp, std::move(all));
  const int n = static_cast<int>(un.opens.size());
  // owners[i]: pieces whose patch contains the open; relative fullness and
  // exact agreement across every pair of owners
  std::vector<std::vector<std::pair<int, int>>> owners(n);  // (piece, local index)
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < static_cast<int>(pieces.size()); ++t) {
      if (!is_subset(sp, un.opens[i], pieces[t].open)) continue;
      const int li = index_of(pieces[t].alg.universe, un.opens[i]);
      if (li < 0)
        throw OverlapMismatch("open is missing from an overlapping piece: " +
                              open_to_string(un.opens[i]));
      owners[i].emplace_back(t, li);
    }
    for (const auto& [t, li] : owners[i]) {
      if (pieces[t].alg.values[li].dim != pieces[owners[i][0].first].alg.values[owners[i][0].second].dim)
        throw OverlapMismatch("values disagree at " + open_to_string(un.opens[i]));
    }
  }
  std::vector<VectObj> values(n);
  for (int i = 0; i < n; ++i)
    values[i] = pieces[owners[i][0].first].alg.values[owners[i][0].second];
  std::map<Key, LinMap> incl, mult;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || !is_subset(sp, un.opens[i], un.opens[j])) continue;
      std::optional<LinMap> chosen;
      for (const auto& [t, lj] : owners[j]) {
        const int li = index_of(pieces[t].alg.universe, un.opens[i]);
        if (li < 0)
          throw OverlapMismatch("open is missing from an overlapping piece: " +
                                open_to_string(un.opens[i]));
        const LinMap& map = pieces[t].alg.incl.at({li, lj});
        if (!chosen) {
          chosen = map;
        } else if (!(*chosen == map)) {
          throw OverlapMismatch("inclusions disagree at " + open_to_string(un.opens[i]) +
                                " into " + open_to_string(un.opens[j]));
        }
      }
      incl.emplace(Key{i, j}, *chosen);
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!is_disjoint(sp, un.opens[i], un.opens[j])) continue;
      const OpenSet w = disjoint_union(sp, un.opens[i], un.opens[j]);
      const int k = index_of(un, w);
      if (k < 0) continue;
      std::optional<LinMap> chosen;
      for (const auto& [t, lk] : owners[k]) {
        const int li = index_of(pieces[t].alg.universe, un.opens[i]);
        const int lj = index_of(pieces[t].alg.universe, un.opens[j]);
        if (li < 0 || lj < 0)
          throw OverlapMismatch("open is missing from an overlapping piece: " +
                                open_to_string(w));
        const LinMap& map = pieces[t].alg.mult.at({li, lj});
        if (!chosen) {
          chosen = map;
        } else if (!(*chosen == map)) {
          throw OverlapMismatch("multiplications disagree at " + open_to_string(un.opens[i]) +
                                " with " + open_to_string(un.opens[j]));
        }
      }
      mult.emplace(Key{i, j}, *chosen);
    }
  }
  std::optional<LinMap> unit;
  const int e = empty_index(un);
  if (e >= 0) {
    for (const auto& [t, le] : owners[e]) {
      const auto& pu = pieces[t].alg.unit_empty;
      if (!pu) throw OverlapMismatch("unit is missing from an overlapping piece");
      if (!unit) {
        unit = *pu;
      } else if (!(*unit == *pu)) {
        throw OverlapMismatch("units disagree at the empty open");
      }
    }
  }
  return make_prefact(std::move(un), std::move(values), std::move(incl), std::move(mult),
                      std::move(unit));
}

BarResult bar_relative_tensor(const RightModule& m1, const Algebra& a, const LeftModule& m2) {
  validate_algebra(a);
  const int c = a.carrier.dim;
  if (m1.action.src.dim != m1.carrier.dim * c || m1.action.dst.dim != m1.carrier.dim)
    throw AxiomFailure("right module action has wrong shape");
  if (m2.action.src.dim != c * m2.carrier.dim || m2.action.dst.dim != m2.carrier.dim)
    throw AxiomFailure("left module action has wrong shape");
  const LinMap id1 = LinMap::identity(m1.carrier);
  const LinMap id2 = LinMap::identity(m2.carrier);
  const LinMap ida = LinMap::identity(a.carrier);
  const VectObj q = VectObj::unit();
  if (!(compose(m1.action, tensor(m1.action, ida)) ==
        compose(m1.action, tensor(id1, a.mult))))
    throw AxiomFailure("right module associativity fails");
  if (!(compose(m1.action, tensor(id1, a.unit)) ==
        LinMap::identity_reshaped(tensor(m1.carrier, q), m1.carrier)))
    throw AxiomFailure("right module unit law fails");
  if (!(compose(m2.action, tensor(a.mult, id2)) ==
        compose(m2.action, tensor(ida, m2.action))))
    throw AxiomFailure("left module associativity fails");
  if (!(compose(m2.action, tensor(a.unit, id2)) ==
        LinMap::identity_reshaped(tensor(q, m2.carrier), m2.carrier)))
    throw AxiomFailure("left module unit law fails");
  const LinMap d0 = tensor(m1.action, id2);
  const LinMap d1 = tensor(id1, m2.action);
  Cokernel ck = reflexive_coequalizer(d0, d1);
  return BarResult{std::move(ck.obj), std::move(ck.projection)};
}

VectObj circle_sections(const Algebra& a) {
  validate_algebra(a);
  const Algebra ae = tensor_algebra(a, opposite_algebra(a));
  const LinMap two =
      compose(a.mult, tensor(a.mult, LinMap::identity(a.carrier)));
  const std::vector<VectObj> aaa{a.carrier, a.carrier, a.carrier};
  // x . (a (x) b) = b x a and (a (x) b) . y = a y b
  const LinMap right_action = compose(two, factor_permutation(aaa, {2, 0, 1}));
  const LinMap left_action = compose(two, factor_permutation(aaa, {0, 2, 1}));
  return bar_relative_tensor(RightModule{a.carrier, right_action}, ae,
                             LeftModule{a.carrier, left_action})
      .value;
}

PreFactAlg cone_assemble(const ConeData& d, const Universe& un) {
  validate_cone_module(d);
  return standard_star_prefact(d, un);
}

ConeDecomposition cone_decompose(const PreFactAlg& f) {
  const StratSpace& sp = f.universe.space;
  if (sp.components.size() != 1 || !std::holds_alternative<StarComp>(sp.components[0]))
    throw BadConfiguration("cone decomposition needs a single star component");
  const int k = std::get<StarComp>(sp.components[0]).rays;
  const auto& opens = f.universe.opens;
  const int n = static_cast<int>(opens.size());
  if (empty_index(f.universe) < 0)
    throw MissingOpens("cone decomposition needs the empty open listed");
  // cone disks: single vertex pieces whose germs reach (0, x_r) on every ray
  auto cone_radii = [&](int i) -> std::optional<std::vector<Rat>> {
    const auto pieces = connected_pieces(sp, opens[i]);
    if (pieces.size() != 1 || pieces[0].kind != Piece::Kind::VERTEX_STAR)
      return std::nullopt;
    std::vector<Rat> out;
    for (const Interval& gm : pieces[0].germs) out.push_back(gm.hi);
    return out;
  };
  int ci = -1, cj = -1;
  std::vector<Rat> small_r, big_r;
  for (int i = 0; i < n && ci < 0; ++i) {
    const auto ri = cone_radii(i);
    if (!ri) continue;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto rj = cone_radii(j);
      if (!rj) continue;
      bool nested = true;
      for (int r = 0; r < k; ++r)
        if (!((*ri)[r] < (*rj)[r])) nested = false;
      if (nested) {
        ci = i;
        cj = j;
        small_r = *ri;
        big_r = *rj;
        break;
      }
    }
  }
  if (ci < 0) throw MissingOpens("cone decomposition needs two nested cone disk opens");
  // one plain interval open per ray strictly between the two cone radii
  std::vector<int> gap(k, -1);
  for (int i = 0; i < n; ++i) {
    const auto pieces = connected_pieces(sp, opens[i]);
    if (pieces.size() != 1 || pieces[0].kind != Piece::Kind::RAY_INTERVAL) continue;
    const int r = pieces[0].ray;
    if (gap[r] >= 0) continue;
    if (small_r[r] <= pieces[0].interval.lo && pieces[0].interval.hi <= big_r[r])
      gap[r] = i;
  }
  for (int r = 0; r < k; ++r)
    if (gap[r] < 0)
      throw MissingOpens("cone decomposition needs a ray interval between the two cones");
  auto probe = [&](const OMorphism& alpha) -> LinMap {
    try {
      return structure_map(f, alpha);
    } catch (const BadConfiguration& err) {
      throw MissingOpens(err.what());
    }
  };
  // per-ray multiplications and units probed on plain interval opens
  std::vector<Algebra> rays;
  for (int r = 0; r < k; ++r) {
    const VectObj carrier = f.values[gap[r]];
    int pi = -1, qi = -1, wi = -1;
    for (int w = 0; w < n && pi < 0; ++w) {
      const auto wp = connected_pieces(sp, opens[w]);
      if (wp.size() != 1 || wp[0].kind != Piece::Kind::RAY_INTERVAL || wp[0].ray != r)
        continue;
      for (int p = 0; p < n && pi < 0; ++p) {
        const auto pp = connected_pieces(sp, opens[p]);
        if (pp.size() != 1 || pp[0].kind != Piece::Kind::RAY_INTERVAL || pp[0].ray != r)
          continue;
        if (!is_subset(sp, opens[p], opens[w])) continue;
        for (int q = 0; q < n; ++q) {
          if (q == p) continue;
          const auto qp = connected_pieces(sp, opens[q]);
          if (qp.size() != 1 || qp[0].kind != Piece::Kind::RAY_INTERVAL || qp[0].ray != r)
            continue;
          if (!is_subset(sp, opens[q], opens[w])) continue;
          if (!is_disjoint(sp, opens[p], opens[q])) continue;
          if (!(qp[0].interval.hi <= pp[0].interval.lo)) continue;  // p is the far one
          if (index_of(f.universe, disjoint_union(sp, opens[p], opens[q])) < 0) continue;
          if (f.values[p].dim != carrier.dim || f.values[q].dim != carrier.dim ||
              f.values[w].dim != carrier.dim)
            continue;
          pi = p;
          qi = q;
          wi = w;
          break;
        }
      }
    }
    if (pi < 0)
      throw MissingOpens("cone decomposition needs a far/near interval pair on each ray");
    const LinMap mult =
        probe(make_morphism(sp, OTuple{{opens[pi], opens[qi]}}, OTuple{{opens[wi]}}, {0, 0}));
    const LinMap unit =
        probe(make_morphism(sp, OTuple{{}}, OTuple{{opens[wi]}}, {}));
    // plain intervals on one ray share their value space; relabel onto the gap
    const LinMap to_gap = LinMap::identity_reshaped(f.values[wi], carrier);
    rays.push_back(make_algebra(carrier, compose(to_gap, mult), compose(to_gap, unit)));
  }
  const VectObj carrier = f.values[ci];
  const LinMap point = probe(make_morphism(sp, OTuple{{}}, OTuple{{opens[ci]}}, {}));
  std::vector<OpenSet> action_src;
  for (int r = 0; r < k; ++r) action_src.push_back(opens[gap[r]]);
  action_src.push_back(opens[ci]);
  const LinMap action = probe(make_morphism(
      sp, OTuple{std::move(action_src)}, OTuple{{opens[cj]}},
      std::vector<int>(k + 1, 0)));
  if (action.dst.dim != carrier.dim)
    throw BadConfiguration("cone disk values vary between the nested cones");
  const LinMap action_on_small =
      compose(LinMap::identity_reshaped(f.values[cj], carrier), action);
  ConeData data{std::move(rays), carrier, point, action_on_small};
  validate_cone_module(data);
  // half line: push every radially symmetric open down to the one-ray star
  std::vector<OpenSet> hopens;
  for (const OpenSet& u : opens) {
    if (is_empty(u)) {
      hopens.push_back(empty_open(StratSpace::star(1)));
      continue;
    }
    if (!is_horizontal(sp, u)) continue;
    const auto* so = std::get_if<StarOpen>(&u.parts[0]);
    if (!so) continue;
    OpenSet h;
    h.parts.push_back(StarOpen{{so->per_ray[0]}, so->vertex});
    hopens.push_back(std::move(h));
  }
  PreFactAlg half =
      pushforward(f, MapDescriptor::cone_proj(k), Universe(StratSpace::star(1), hopens));
  return ConeDecomposition{std::move(data), std::move(half)};
}

}  // namespace factline
