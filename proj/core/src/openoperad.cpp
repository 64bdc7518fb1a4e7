#include <factline/openoperad.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <variant>

namespace factline {

namespace {

void check_universe_space(const StratSpace& space, const Universe& un) {
  if (!(un.space == space))
    throw BadConfiguration("universe is declared on a different space");
}

const StarComp& single_star(const StratSpace& space) {
  if (space.components.size() != 1 ||
      !std::holds_alternative<StarComp>(space.components[0]))
    throw BadConfiguration("operation requires a single star component");
  return std::get<StarComp>(space.components[0]);
}

// Open intervals minus the closed interval [c, d].
std::vector<Interval> subtract_closed(const std::vector<Interval>& list, const Rat& c,
                                      const Rat& d) {
  std::vector<Interval> out;
  for (const Interval& iv : list) {
    if (iv.hi <= c || d <= iv.lo) {
      out.push_back(iv);
      continue;
    }
    if (iv.lo < c) out.push_back(Interval{iv.lo, std::min(iv.hi, c)});
    if (d < iv.hi) out.push_back(Interval{std::max(iv.lo, d), iv.hi});
  }
  return out;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

// Restricted growth strings: all partitions of {0..n-1} in lexicographic order.
template <typename Fn>
void for_each_partition(int n, Fn&& fn) {
  std::vector<int> a(static_cast<std::size_t>(std::max(n, 0)), 0);
  const auto rec = [&](auto&& self, int i, int mx) -> void {
    if (i == n) {
      fn(a);
      return;
    }
    for (int v = 0; v <= mx + 1; ++v) {
      a[static_cast<std::size_t>(i)] = v;
      self(self, i + 1, std::max(mx, v));
    }
  };
  rec(rec, 0, -1);
}

OpenSet blocks_union(const StratSpace& space, const std::vector<Piece>& pieces,
                     const std::vector<int>& members) {
  std::vector<Piece> sel;
  sel.reserve(members.size());
  for (int idx : members) sel.push_back(pieces[static_cast<std::size_t>(idx)]);
  return pieces_open(space, sel);
}

}  // namespace

bool operator==(const OTuple& a, const OTuple& b) { return a.opens == b.opens; }
bool operator!=(const OTuple& a, const OTuple& b) { return !(a == b); }

bool operator==(const OMorphism& a, const OMorphism& b) {
  return a.src == b.src && a.dst == b.dst && a.map == b.map;
}
bool operator!=(const OMorphism& a, const OMorphism& b) { return !(a == b); }

OMorphism make_morphism(const StratSpace& space, OTuple src, OTuple dst,
                        std::vector<int> map) {
  for (const OpenSet& u : src.opens) validate_open(space, u);
  for (const OpenSet& v : dst.opens) validate_open(space, v);
  if (map.size() != src.opens.size())
    throw InvalidComposite("tuple map length does not match the source tuple");
  const int m = static_cast<int>(dst.opens.size());
  for (int j : map)
    if (j < -1 || j >= m) throw InvalidComposite("tuple map entry out of range");
  for (int j = 0; j < m; ++j) {
    std::vector<int> fiber;
    for (int i = 0; i < static_cast<int>(map.size()); ++i)
      if (map[static_cast<std::size_t>(i)] == j) fiber.push_back(i);
    for (int i : fiber)
      if (!is_subset(space, src.opens[static_cast<std::size_t>(i)],
                     dst.opens[static_cast<std::size_t>(j)]))
        throw InvalidComposite("fiber open is not contained in its destination open");
    for (std::size_t a = 0; a < fiber.size(); ++a)
      for (std::size_t b = a + 1; b < fiber.size(); ++b)
        if (!is_disjoint(space, src.opens[static_cast<std::size_t>(fiber[a])],
                         src.opens[static_cast<std::size_t>(fiber[b])]))
          throw InvalidComposite("fiber opens overlap");
  }
  return OMorphism{std::move(src), std::move(dst), std::move(map)};
}

OMorphism identity_morphism(const StratSpace& space, OTuple objects) {
  std::vector<int> map(objects.opens.size());
  std::iota(map.begin(), map.end(), 0);
  OTuple dst = objects;
  return make_morphism(space, std::move(objects), std::move(dst), std::move(map));
}

OMorphism compose(const StratSpace& space, const OMorphism& g, const OMorphism& f) {
  if (f.dst != g.src) throw InvalidComposite("endpoints do not match");
  std::vector<int> map(f.map.size());
  for (std::size_t i = 0; i < f.map.size(); ++i)
    map[i] = f.map[i] < 0 ? -1 : g.map[static_cast<std::size_t>(f.map[i])];
  return make_morphism(space, f.src, g.dst, std::move(map));
}

bool is_active(const OMorphism& f) {
  return std::all_of(f.map.begin(), f.map.end(), [](int j) { return j >= 0; });
}

bool is_inert(const OMorphism& f) {
  for (int j = 0; j < static_cast<int>(f.dst.opens.size()); ++j) {
    int hits = 0;
    for (std::size_t i = 0; i < f.map.size(); ++i) {
      if (f.map[i] != j) continue;
      ++hits;
      if (!(f.src.opens[i] == f.dst.opens[static_cast<std::size_t>(j)])) return false;
    }
    if (hits != 1) return false;
  }
  return true;
}

std::pair<OMorphism, OMorphism> factor_active_inert(const StratSpace& space,
                                                    const OMorphism& f) {
  std::vector<int> kept;
  for (int i = 0; i < static_cast<int>(f.map.size()); ++i)
    if (f.map[static_cast<std::size_t>(i)] >= 0) kept.push_back(i);
  OTuple mid;
  std::vector<int> inert_map(f.map.size(), -1);
  std::vector<int> active_map;
  for (int pos = 0; pos < static_cast<int>(kept.size()); ++pos) {
    const auto i = static_cast<std::size_t>(kept[static_cast<std::size_t>(pos)]);
    mid.opens.push_back(f.src.opens[i]);
    inert_map[i] = pos;
    active_map.push_back(f.map[i]);
  }
  OMorphism inert = make_morphism(space, f.src, mid, std::move(inert_map));
  OMorphism active = make_morphism(space, std::move(mid), f.dst, std::move(active_map));
  return {std::move(inert), std::move(active)};
}

bool is_cocartesian(const StratSpace& space, const OMorphism& f, const Universe& un) {
  check_universe_space(space, un);
  for (int j = 0; j < static_cast<int>(f.dst.opens.size()); ++j) {
    OpenSet u = empty_open(space);
    for (std::size_t i = 0; i < f.map.size(); ++i)
      if (f.map[i] == j) u = disjoint_union(space, u, f.src.opens[i]);
    if (!(u == f.dst.opens[static_cast<std::size_t>(j)])) return false;
    if (!un.contains(u)) return false;
  }
  return true;
}

EqRel::EqRel(std::vector<int> raw) : block_of(std::move(raw)) {
  std::map<int, int> renumber;
  int next = 0;
  for (int& v : block_of) {
    const auto [it, inserted] = renumber.try_emplace(v, next);
    if (inserted) ++next;
    v = it->second;
  }
}

int EqRel::num_blocks() const {
  return block_of.empty() ? 0 : *std::max_element(block_of.begin(), block_of.end()) + 1;
}

std::vector<std::vector<int>> EqRel::blocks() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(num_blocks()));
  for (int i = 0; i < size(); ++i)
    out[static_cast<std::size_t>(block_of[static_cast<std::size_t>(i)])].push_back(i);
  return out;
}

bool operator==(const EqRel& a, const EqRel& b) { return a.block_of == b.block_of; }
bool operator!=(const EqRel& a, const EqRel& b) { return !(a == b); }
bool operator<(const EqRel& a, const EqRel& b) { return a.block_of < b.block_of; }

bool refines(const EqRel& fine, const EqRel& coarse) {
  if (fine.size() != coarse.size())
    throw BadConfiguration("relations live on different component sets");
  std::vector<int> image(static_cast<std::size_t>(fine.num_blocks()), -1);
  for (int i = 0; i < fine.size(); ++i) {
    const auto fb = static_cast<std::size_t>(fine.block_of[static_cast<std::size_t>(i)]);
    const int cb = coarse.block_of[static_cast<std::size_t>(i)];
    if (image[fb] == -1)
      image[fb] = cb;
    else if (image[fb] != cb)
      return false;
  }
  return true;
}

EqRel meet(const EqRel& a, const EqRel& b) {
  if (a.size() != b.size())
    throw BadConfiguration("relations live on different component sets");
  std::vector<int> raw(a.block_of.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    raw[i] = a.block_of[i] * (b.num_blocks() + 1) + b.block_of[i];
  return EqRel(std::move(raw));
}

EqRel encode_active(const StratSpace& space, const OMorphism& alpha) {
  if (alpha.dst.opens.size() != 1 || !is_active(alpha))
    throw BadConfiguration("encoding requires an active map into a 1-tuple");
  const OpenSet& b = alpha.dst.opens[0];
  const int n = static_cast<int>(connected_pieces(space, b).size());
  UnionFind uf(n);
  for (const OpenSet& r : alpha.src.opens) {
    const std::vector<int> hit = piece_containment_map(space, r, b);
    for (std::size_t k = 1; k < hit.size(); ++k) uf.unite(hit[0], hit[k]);
  }
  std::vector<int> raw(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) raw[static_cast<std::size_t>(i)] = uf.find(i);
  return EqRel(std::move(raw));
}

EqRel encode_cocart(const StratSpace& space, const OMorphism& gamma) {
  if (gamma.dst.opens.size() != 1 || !is_active(gamma))
    throw BadConfiguration("encoding requires an active map into a 1-tuple");
  const OpenSet& b = gamma.dst.opens[0];
  OpenSet total = empty_open(space);
  for (const OpenSet& r : gamma.src.opens) total = disjoint_union(space, total, r);
  if (!(total == b))
    throw BadConfiguration("source opens do not partition the components of the target");
  const int n = static_cast<int>(connected_pieces(space, b).size());
  std::vector<int> raw(static_cast<std::size_t>(n), -1);
  for (int idx = 0; idx < static_cast<int>(gamma.src.opens.size()); ++idx) {
    const std::vector<int> hit =
        piece_containment_map(space, gamma.src.opens[static_cast<std::size_t>(idx)], b);
    for (int p : hit) raw[static_cast<std::size_t>(p)] = idx;
  }
  return EqRel(std::move(raw));
}

OMorphism decode_cocart(const StratSpace& space, const EqRel& rel, const OpenSet& b,
                        const Universe& un) {
  check_universe_space(space, un);
  validate_open(space, b);
  const std::vector<Piece> pieces = connected_pieces(space, b);
  if (rel.size() != static_cast<int>(pieces.size()))
    throw BadConfiguration("relation size does not match the component count");
  OTuple src;
  for (const std::vector<int>& blk : rel.blocks()) {
    OpenSet u = blocks_union(space, pieces, blk);
    if (!un.contains(u))
      throw BlockNotInUniverse("a block union is not listed in the universe");
    src.opens.push_back(std::move(u));
  }
  const std::vector<int> map(src.opens.size(), 0);
  return make_morphism(space, std::move(src), OTuple{{b}}, map);
}

std::vector<OMorphism> enumerate_cocart_into(const StratSpace& space, const OpenSet& b,
                                             const Universe& un) {
  check_universe_space(space, un);
  if (!un.contains(b)) throw BadConfiguration("target open is not listed");
  const std::vector<Piece> pieces = connected_pieces(space, b);
  const int n = static_cast<int>(pieces.size());
  if (n > 8) throw BadConfiguration("component count too large to enumerate");
  std::vector<OMorphism> out;
  for_each_partition(n, [&](const std::vector<int>& rgs) {
    const EqRel rel{std::vector<int>(rgs)};
    OTuple src;
    for (const std::vector<int>& blk : rel.blocks()) {
      OpenSet u = blocks_union(space, pieces, blk);
      if (!un.contains(u)) return;
      src.opens.push_back(std::move(u));
    }
    const std::vector<int> map(src.opens.size(), 0);
    out.push_back(make_morphism(space, std::move(src), OTuple{{b}}, map));
  });
  return out;
}

KalphaReport factorization_poset(const StratSpace& space, const OMorphism& alpha,
                                 const Universe& small, const Universe& big) {
  check_universe_space(space, small);
  check_universe_space(space, big);
  if (alpha.dst.opens.size() != 1 || !is_active(alpha))
    throw BadConfiguration("factorizations require an active map into a 1-tuple");
  for (const OpenSet& r : alpha.src.opens)
    if (is_empty(r))
      throw BadConfiguration("source tuple must be free of the empty open");
  const auto in_big = sieve_predicate(big);
  for (const OpenSet& s : small.opens)
    if (!is_empty(s) && !in_big(s))
      throw BadConfiguration("small universe leaves the sieve of the big universe");

  const OpenSet& r = alpha.dst.opens[0];
  const std::vector<Piece> pieces = connected_pieces(space, r);
  const EqRel base = encode_active(space, alpha);
  const int ncls = base.num_blocks();
  if (ncls > 9) throw BadConfiguration("too many classes to enumerate");

  std::vector<EqRel> rels;
  for_each_partition(ncls, [&](const std::vector<int>& rgs) {
    std::vector<int> raw(base.block_of.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
      raw[i] = rgs[static_cast<std::size_t>(base.block_of[i])];
    EqRel rel(std::move(raw));
    for (const std::vector<int>& blk : rel.blocks())
      if (!small.contains(blocks_union(space, pieces, blk))) return;
    rels.push_back(std::move(rel));
  });
  std::sort(rels.begin(), rels.end());

  std::vector<std::pair<int, int>> leq;
  for (int i = 0; i < static_cast<int>(rels.size()); ++i)
    for (int j = 0; j < static_cast<int>(rels.size()); ++j)
      if (i != j && refines(rels[static_cast<std::size_t>(i)], rels[static_cast<std::size_t>(j)]))
        leq.emplace_back(i, j);

  KalphaReport report{rels, FinPoset(static_cast<int>(rels.size()), leq), rels.empty(),
                      true, ""};
  if (report.empty) {
    report.witness = "no coarsening of the encoded relation has all block unions listed";
    return report;
  }
  for (std::size_t i = 0; i < rels.size() && report.codirected; ++i)
    for (std::size_t j = i + 1; j < rels.size() && report.codirected; ++j) {
      const EqRel m = meet(rels[i], rels[j]);
      for (const std::vector<int>& blk : m.blocks())
        if (!small.contains(blocks_union(space, pieces, blk))) {
          report.codirected = false;
          report.witness =
              "the meet of two listed factorizations has an unlisted block union";
          break;
        }
    }
  return report;
}

OMorphism complement_op(const StratSpace& space, const OMorphism& iota,
                        const Universe& un) {
  single_star(space);
  check_universe_space(space, un);
  if (iota.dst.opens.size() != 1 || iota.src.opens.size() > 1 || !is_active(iota))
    throw BadConfiguration("complement requires a 0- or 1-ary map into a 1-tuple");
  const OpenSet& target = iota.dst.opens[0];
  if (!contains_cone_point(space, target))
    throw BadConfiguration("complement target must contain the cone point");
  if (!iota.src.opens.empty() && !contains_cone_point(space, iota.src.opens[0]))
    throw BadConfiguration("complement source must contain the cone point");

  StarOpen rest = std::get<StarOpen>(target.parts[0]);
  rest.vertex = false;
  if (!iota.src.opens.empty()) {
    const auto& inner = std::get<StarOpen>(iota.src.opens[0].parts[0]);
    for (std::size_t ray = 0; ray < rest.per_ray.size(); ++ray)
      for (const Interval& iv : inner.per_ray[ray])
        rest.per_ray[ray] = subtract_closed(rest.per_ray[ray], iv.lo, iv.hi);
  }
  OpenSet complement{{rest}};
  validate_open(space, complement);
  if (is_empty(complement))
    throw ComplementNotInUniverse("complement has empty interior");
  if (!un.contains(complement))
    throw ComplementNotInUniverse("complement open is not listed in the universe");

  OTuple src = iota.src;
  src.opens.push_back(std::move(complement));
  const std::vector<int> map(src.opens.size(), 0);
  return make_morphism(space, std::move(src), iota.dst, map);
}

bool is_horizontal(const StratSpace& space, const OpenSet& u) {
  validate_open(space, u);
  for (std::size_t c = 0; c < space.components.size(); ++c) {
    if (!std::holds_alternative<StarComp>(space.components[c]))
      throw BadConfiguration("horizontality is defined on stars");
    const auto& part = std::get<StarOpen>(u.parts[c]);
    for (std::size_t ray = 1; ray < part.per_ray.size(); ++ray)
      if (!(part.per_ray[ray] == part.per_ray[0])) return false;
  }
  return true;
}

bool contains_cone_point(const StratSpace& space, const OpenSet& u) {
  validate_open(space, u);
  for (std::size_t c = 0; c < space.components.size(); ++c)
    if (std::holds_alternative<StarComp>(space.components[c]) &&
        std::get<StarOpen>(u.parts[c]).vertex)
      return true;
  return false;
}

bool PushoutReport::all_ok() const {
  return std::all_of(items.begin(), items.end(),
                     [](const AssumptionItem& it) { return it.ok; });
}

PushoutReport check_pushout_assumptions(const Universe& chart) {
  const StratSpace& space = chart.space;
  single_star(space);
  const std::vector<OpenSet>& colors = chart.opens;
  const int nc = static_cast<int>(colors.size());

  std::vector<bool> emp(static_cast<std::size_t>(nc)), vert(static_cast<std::size_t>(nc)),
      horiz(static_cast<std::size_t>(nc));
  for (int i = 0; i < nc; ++i) {
    const auto& u = colors[static_cast<std::size_t>(i)];
    emp[static_cast<std::size_t>(i)] = is_empty(u);
    vert[static_cast<std::size_t>(i)] = contains_cone_point(space, u);
    horiz[static_cast<std::size_t>(i)] = is_horizontal(space, u);
  }
  std::vector<int> cone_colors, punct_colors;
  for (int i = 0; i < nc; ++i) {
    if (horiz[static_cast<std::size_t>(i)] && vert[static_cast<std::size_t>(i)] &&
        !emp[static_cast<std::size_t>(i)])
      cone_colors.push_back(i);
    if (!vert[static_cast<std::size_t>(i)] && !emp[static_cast<std::size_t>(i)])
      punct_colors.push_back(i);
  }

  PushoutReport rep{};
  const auto fail = [&rep](int item, std::string witness) {
    auto& it = rep.items[static_cast<std::size_t>(item)];
    if (!it.ok) return;
    it.ok = false;
    it.witness = std::move(witness);
  };
  const auto tag = [](int i) { return "color #" + std::to_string(i); };

  // every color horizontal or cone-point-free
  for (int i = 0; i < nc; ++i) {
    if (emp[static_cast<std::size_t>(i)])
      fail(0, "the empty open is neither a cone-point color nor a punctured color");
    else if (vert[static_cast<std::size_t>(i)] && !horiz[static_cast<std::size_t>(i)])
      fail(0, tag(i) + " contains the cone point but is not radially symmetric");
  }

  // strict inclusion chains never close into loops (colors are deduplicated)
  for (int a = 0; a < nc; ++a)
    for (int b = 0; b < nc; ++b) {
      if (a == b || !is_subset(space, colors[static_cast<std::size_t>(a)],
                               colors[static_cast<std::size_t>(b)]))
        continue;
      for (int c = 0; c < nc; ++c)
        if (c != b && c != a &&
            is_subset(space, colors[static_cast<std::size_t>(b)],
                      colors[static_cast<std::size_t>(c)]) &&
            colors[static_cast<std::size_t>(a)] == colors[static_cast<std::size_t>(c)])
          fail(1, "a strict chain of inclusions closes into a loop at " + tag(a));
    }

  // unique nullary operation into each color
  for (int i = 0; i < nc; ++i) {
    try {
      make_morphism(space, OTuple{}, OTuple{{colors[static_cast<std::size_t>(i)]}}, {});
    } catch (const InvalidComposite&) {
      fail(2, tag(i) + " admits no nullary operation");
    }
  }

  // at most one cone-point input; cone-point input forces cone-point output
  for (std::size_t a = 0; a < cone_colors.size(); ++a)
    for (std::size_t b = a + 1; b < cone_colors.size(); ++b) {
      const auto& o1 = colors[static_cast<std::size_t>(cone_colors[a])];
      const auto& o2 = colors[static_cast<std::size_t>(cone_colors[b])];
      if (!is_disjoint(space, o1, o2)) continue;
      for (int x = 0; x < nc; ++x)
        if (is_subset(space, o1, colors[static_cast<std::size_t>(x)]) &&
            is_subset(space, o2, colors[static_cast<std::size_t>(x)]))
          fail(3, "two disjoint cone-point colors fit together into " + tag(x));
    }
  for (int o : cone_colors)
    for (int x = 0; x < nc; ++x) {
      if (!is_subset(space, colors[static_cast<std::size_t>(o)],
                     colors[static_cast<std::size_t>(x)]))
        continue;
      const bool x_cone = std::binary_search(cone_colors.begin(), cone_colors.end(), x);
      if (!x_cone)
        fail(3, tag(x) + " receives a cone-point input but is not a cone-point color");
    }

  // pairwise non-isomorphic inputs; only the empty open can break this
  for (int i = 0; i < nc; ++i)
    if (emp[static_cast<std::size_t>(i)])
      fail(4, "the empty open is listed; a pair of empty inputs is isomorphic");

  // complements of cone-point operations exist and absorb punctured operations
  for (int op : cone_colors) {
    const auto& outer = std::get<StarOpen>(colors[static_cast<std::size_t>(op)].parts[0]);
    StarOpen punctured = outer;
    punctured.vertex = false;
    const OpenSet punctured_open{{punctured}};
    if (!chart.contains(punctured_open)) {
      fail(5, "the nullary complement of " + tag(op) + " is not listed");
    } else {
      for (int x : punct_colors)
        if (is_subset(space, colors[static_cast<std::size_t>(x)],
                      colors[static_cast<std::size_t>(op)]) &&
            !is_subset(space, colors[static_cast<std::size_t>(x)], punctured_open))
          fail(5, tag(x) + " escapes the nullary complement of " + tag(op));
    }
    for (int in : cone_colors) {
      if (in == op ||
          !is_subset(space, colors[static_cast<std::size_t>(in)],
                     colors[static_cast<std::size_t>(op)]))
        continue;
      StarOpen rest = outer;
      rest.vertex = false;
      const auto& inner = std::get<StarOpen>(colors[static_cast<std::size_t>(in)].parts[0]);
      for (std::size_t ray = 0; ray < rest.per_ray.size(); ++ray)
        for (const Interval& iv : inner.per_ray[ray])
          rest.per_ray[ray] = subtract_closed(rest.per_ray[ray], iv.lo, iv.hi);
      const OpenSet comp{{rest}};
      if (is_empty(comp)) {
        fail(5, "the complement of " + tag(in) + " in " + tag(op) +
                    " has empty interior");
        continue;
      }
      if (!chart.contains(comp)) {
        fail(5, "the complement of " + tag(in) + " in " + tag(op) + " is not listed");
        continue;
      }
      for (int x : punct_colors)
        if (is_subset(space, colors[static_cast<std::size_t>(x)],
                      colors[static_cast<std::size_t>(op)]) &&
            is_disjoint(space, colors[static_cast<std::size_t>(x)],
                        colors[static_cast<std::size_t>(in)]) &&
            !is_subset(space, colors[static_cast<std::size_t>(x)], comp))
          fail(5, tag(x) + " avoids " + tag(in) + " but escapes its complement in " +
                      tag(op));
    }
  }
  return rep;
}

}  // namespace factline
