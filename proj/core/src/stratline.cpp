#include <factline/stratline.hpp>

#include <factline/finposet.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace factline {

bool operator==(const Interval& a, const Interval& b) { return a.lo == b.lo && a.hi == b.hi; }
bool operator<(const Interval& a, const Interval& b) {
  if (a.lo != b.lo) return a.lo < b.lo;
  return a.hi < b.hi;
}

bool operator==(const LineComp& a, const LineComp& b) { return a.marks == b.marks; }
bool operator==(const CircleComp& a, const CircleComp& b) {
  return a.circumference == b.circumference && a.marks == b.marks;
}
bool operator==(const StarComp& a, const StarComp& b) { return a.rays == b.rays; }

bool operator==(const Arc& a, const Arc& b) { return a.start == b.start && a.end == b.end; }
bool operator<(const Arc& a, const Arc& b) {
  if (a.start != b.start) return a.start < b.start;
  return a.end < b.end;
}
bool operator==(const LineOpen& a, const LineOpen& b) { return a.intervals == b.intervals; }
bool operator<(const LineOpen& a, const LineOpen& b) { return a.intervals < b.intervals; }
bool operator==(const CircleOpen& a, const CircleOpen& b) { return a.arcs == b.arcs; }
bool operator<(const CircleOpen& a, const CircleOpen& b) { return a.arcs < b.arcs; }
bool operator==(const StarOpen& a, const StarOpen& b) {
  return a.vertex == b.vertex && a.per_ray == b.per_ray;
}
bool operator<(const StarOpen& a, const StarOpen& b) {
  if (a.vertex != b.vertex) return a.vertex < b.vertex;
  return a.per_ray < b.per_ray;
}
bool operator==(const OpenSet& a, const OpenSet& b) { return a.parts == b.parts; }
bool operator<(const OpenSet& a, const OpenSet& b) { return a.parts < b.parts; }

StratSpace::StratSpace(std::vector<Component> comps) : components(std::move(comps)) {
  for (auto& c : components) {
    if (const auto* line = std::get_if<LineComp>(&c)) {
      for (std::size_t i = 0; i + 1 < line->marks.size(); ++i)
        if (!(line->marks[i] < line->marks[i + 1])) throw BadOpen("line marks must strictly increase");
      if (line->marks.size() == 1) c = StarComp{2};  // canonical one-mark line
    } else if (const auto* circle = std::get_if<CircleComp>(&c)) {
      if (!(circle->circumference > 0)) throw BadOpen("circumference must be positive");
      for (std::size_t i = 0; i + 1 < circle->marks.size(); ++i)
        if (!(circle->marks[i] < circle->marks[i + 1]))
          throw BadOpen("circle marks must strictly increase");
      for (const auto& m : circle->marks)
        if (m < 0 || m >= circle->circumference) throw BadOpen("circle mark outside [0, L)");
    } else if (const auto* star = std::get_if<StarComp>(&c)) {
      if (star->rays < 1) throw BadOpen("star needs at least one ray");
    }
  }
}

StratSpace StratSpace::line(std::vector<Rat> marks) {
  return StratSpace({Component{LineComp{std::move(marks)}}});
}
StratSpace StratSpace::circle(Rat circumference, std::vector<Rat> marks) {
  return StratSpace({Component{CircleComp{std::move(circumference), std::move(marks)}}});
}
StratSpace StratSpace::star(int rays) { return StratSpace({Component{StarComp{rays}}}); }

StratSpace StratSpace::disjoint(const StratSpace& a, const StratSpace& b) {
  std::vector<Component> comps = a.components;
  comps.insert(comps.end(), b.components.begin(), b.components.end());
  return StratSpace(std::move(comps));
}

bool operator==(const StratSpace& a, const StratSpace& b) { return a.components == b.components; }

namespace {

void validate_interval_list(const std::vector<Interval>& xs, bool nonnegative, const char* where) {
  for (const auto& iv : xs) {
    if (!(iv.lo < iv.hi)) throw BadOpen(std::string(where) + ": interval with lo >= hi");
    if (nonnegative && iv.lo < 0) throw BadOpen(std::string(where) + ": negative radius");
  }
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    if (!(xs[i].hi <= xs[i + 1].lo)) throw BadOpen(std::string(where) + ": intervals overlap or unsorted");
}

const Rat& circ(const Component& c) { return std::get<CircleComp>(c).circumference; }

}  // namespace

void validate_open(const StratSpace& space, const OpenSet& u) {
  if (u.parts.size() != space.components.size()) throw BadOpen("open has wrong component count");
  for (std::size_t c = 0; c < u.parts.size(); ++c) {
    const Component& sc = space.components[c];
    const ComponentOpen& part = u.parts[c];
    if (std::holds_alternative<LineComp>(sc)) {
      const auto* lo = std::get_if<LineOpen>(&part);
      if (!lo) throw BadOpen("line component needs a line open");
      validate_interval_list(lo->intervals, false, "line open");
    } else if (std::holds_alternative<CircleComp>(sc)) {
      const auto* co = std::get_if<CircleOpen>(&part);
      if (!co) throw BadOpen("circle component needs a circle open");
      const Rat& L = circ(sc);
      for (const auto& a : co->arcs) {
        if (a.start < 0 || a.start >= L) throw BadOpen("arc start outside [0, L)");
        if (!(a.end > a.start)) throw BadOpen("arc with end <= start");
        if (a.end > a.start + L) throw BadOpen("arc longer than the circle");
      }
      for (std::size_t i = 0; i + 1 < co->arcs.size(); ++i) {
        if (!(co->arcs[i].start < co->arcs[i + 1].start)) throw BadOpen("arcs unsorted");
        if (!(co->arcs[i].end <= co->arcs[i + 1].start)) throw BadOpen("arcs overlap");
      }
      if (co->arcs.size() >= 2 && !(co->arcs.back().end <= co->arcs.front().start + L))
        throw BadOpen("last arc wraps into the first");
    } else {
      const auto* so = std::get_if<StarOpen>(&part);
      if (!so) throw BadOpen("star component needs a star open");
      const int rays = std::get<StarComp>(sc).rays;
      if (static_cast<int>(so->per_ray.size()) != rays) throw BadOpen("star open ray count mismatch");
      for (const auto& ray : so->per_ray) validate_interval_list(ray, true, "star open");
      if (so->vertex)
        for (const auto& ray : so->per_ray)
          if (ray.empty() || ray.front().lo != 0)
            throw BadOpen("vertex open needs a (0, x) germ on every ray");
    }
  }
}

OpenSet empty_open(const StratSpace& space) {
  OpenSet u;
  for (const auto& c : space.components) {
    if (std::holds_alternative<LineComp>(c))
      u.parts.emplace_back(LineOpen{});
    else if (std::holds_alternative<CircleComp>(c))
      u.parts.emplace_back(CircleOpen{});
    else
      u.parts.emplace_back(StarOpen{std::vector<std::vector<Interval>>(
                                        static_cast<std::size_t>(std::get<StarComp>(c).rays)),
                                    false});
  }
  return u;
}

bool is_empty(const OpenSet& u) {
  for (const auto& part : u.parts) {
    if (const auto* lo = std::get_if<LineOpen>(&part)) {
      if (!lo->intervals.empty()) return false;
    } else if (const auto* co = std::get_if<CircleOpen>(&part)) {
      if (!co->arcs.empty()) return false;
    } else {
      const auto& so = std::get<StarOpen>(part);
      if (so.vertex) return false;
      for (const auto& ray : so.per_ray)
        if (!ray.empty()) return false;
    }
  }
  return true;
}

StarOpen star2_from_line_intervals(const Rat& mark, std::vector<Interval> intervals) {
  std::sort(intervals.begin(), intervals.end());
  StarOpen out;
  out.per_ray.assign(2, {});
  for (const auto& iv : intervals) {
    if (iv.hi <= mark) {
      out.per_ray[0].push_back({mark - iv.hi, mark - iv.lo});
    } else if (iv.lo >= mark) {
      out.per_ray[1].push_back({iv.lo - mark, iv.hi - mark});
    } else {
      out.vertex = true;
      out.per_ray[0].push_back({Rat(0), mark - iv.lo});
      out.per_ray[1].push_back({Rat(0), iv.hi - mark});
    }
  }
  std::sort(out.per_ray[0].begin(), out.per_ray[0].end());
  std::sort(out.per_ray[1].begin(), out.per_ray[1].end());
  return out;
}

namespace {

// --- interval list primitives (open intervals on a line or ray) ---

std::vector<Interval> intersect_lists(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  std::vector<Interval> out;
  for (const auto& x : a)
    for (const auto& y : b) {
      const Rat lo = std::max(x.lo, y.lo), hi = std::min(x.hi, y.hi);
      if (lo < hi) out.push_back({lo, hi});
    }
  std::sort(out.begin(), out.end());
  return out;
}

bool subset_lists(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  for (const auto& x : a) {
    bool inside = false;
    for (const auto& y : b)
      if (y.lo <= x.lo && x.hi <= y.hi) {
        inside = true;
        break;
      }
    if (!inside) return false;
  }
  return true;
}

bool disjoint_lists(const std::vector<Interval>& a, const std::vector<Interval>& b) {
  for (const auto& x : a)
    for (const auto& y : b)
      if (std::max(x.lo, y.lo) < std::min(x.hi, y.hi)) return false;
  return true;
}

std::vector<Interval> union_lists(std::vector<Interval> a, const std::vector<Interval>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  return a;  // touching intervals stay separate components (open sets)
}

// --- arc primitives ---

Arc normalize_arc(Rat start, Rat end, const Rat& L) {
  while (start >= L) {
    start -= L;
    end -= L;
  }
  while (start < 0) {
    start += L;
    end += L;
  }
  return {start, end};
}

bool arc_contains_arc(const Arc& outer, const Arc& inner, const Rat& L) {
  const Rat shift = inner.start >= outer.start ? Rat(0) : L;
  return inner.end + shift <= outer.end;
}

std::vector<Arc> arc_intersect(const Arc& a, const Arc& b, const Rat& L) {
  std::vector<Arc> out;
  for (int k = -1; k <= 1; ++k) {
    const Rat bs = b.start + k * L, be = b.end + k * L;
    const Rat lo = std::max(a.start, bs), hi = std::min(a.end, be);
    if (lo < hi) out.push_back(normalize_arc(lo, hi, L));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](const Arc& x, const Arc& y) { return x == y; }),
            out.end());
  return out;
}

bool arcs_disjoint(const Arc& a, const Arc& b, const Rat& L) { return arc_intersect(a, b, L).empty(); }

bool arc_contains_angle(const Arc& a, const Rat& theta, const Rat& L) {
  return (theta > a.start && theta < a.end) || (theta + L > a.start && theta + L < a.end);
}

}  // namespace

bool is_subset(const StratSpace& space, const OpenSet& a, const OpenSet& b) {
  validate_open(space, a);
  validate_open(space, b);
  for (std::size_t c = 0; c < a.parts.size(); ++c) {
    if (const auto* la = std::get_if<LineOpen>(&a.parts[c])) {
      if (!subset_lists(la->intervals, std::get<LineOpen>(b.parts[c]).intervals)) return false;
    } else if (const auto* ca = std::get_if<CircleOpen>(&a.parts[c])) {
      const auto& cb = std::get<CircleOpen>(b.parts[c]);
      const Rat& L = circ(space.components[c]);
      for (const auto& arc : ca->arcs) {
        bool inside = false;
        for (const auto& big : cb.arcs)
          if (arc_contains_arc(big, arc, L)) {
            inside = true;
            break;
          }
        if (!inside) return false;
      }
    } else {
      const auto& sa = std::get<StarOpen>(a.parts[c]);
      const auto& sb = std::get<StarOpen>(b.parts[c]);
      if (sa.vertex && !sb.vertex) return false;
      for (std::size_t r = 0; r < sa.per_ray.size(); ++r)
        if (!subset_lists(sa.per_ray[r], sb.per_ray[r])) return false;
    }
  }
  return true;
}

bool is_disjoint(const StratSpace& space, const OpenSet& a, const OpenSet& b) {
  validate_open(space, a);
  validate_open(space, b);
  for (std::size_t c = 0; c < a.parts.size(); ++c) {
    if (const auto* la = std::get_if<LineOpen>(&a.parts[c])) {
      if (!disjoint_lists(la->intervals, std::get<LineOpen>(b.parts[c]).intervals)) return false;
    } else if (const auto* ca = std::get_if<CircleOpen>(&a.parts[c])) {
      const auto& cb = std::get<CircleOpen>(b.parts[c]);
      const Rat& L = circ(space.components[c]);
      for (const auto& x : ca->arcs)
        for (const auto& y : cb.arcs)
          if (!arcs_disjoint(x, y, L)) return false;
    } else {
      const auto& sa = std::get<StarOpen>(a.parts[c]);
      const auto& sb = std::get<StarOpen>(b.parts[c]);
      if (sa.vertex && sb.vertex) return false;
      for (std::size_t r = 0; r < sa.per_ray.size(); ++r)
        if (!disjoint_lists(sa.per_ray[r], sb.per_ray[r])) return false;
    }
  }
  return true;
}

OpenSet intersect(const StratSpace& space, const OpenSet& a, const OpenSet& b) {
  validate_open(space, a);
  validate_open(space, b);
  OpenSet out;
  for (std::size_t c = 0; c < a.parts.size(); ++c) {
    if (const auto* la = std::get_if<LineOpen>(&a.parts[c])) {
      out.parts.emplace_back(LineOpen{intersect_lists(la->intervals, std::get<LineOpen>(b.parts[c]).intervals)});
    } else if (const auto* ca = std::get_if<CircleOpen>(&a.parts[c])) {
      const auto& cb = std::get<CircleOpen>(b.parts[c]);
      const Rat& L = circ(space.components[c]);
      CircleOpen res;
      for (const auto& x : ca->arcs)
        for (const auto& y : cb.arcs) {
          const auto pieces = arc_intersect(x, y, L);
          res.arcs.insert(res.arcs.end(), pieces.begin(), pieces.end());
        }
      std::sort(res.arcs.begin(), res.arcs.end());
      out.parts.emplace_back(std::move(res));
    } else {
      const auto& sa = std::get<StarOpen>(a.parts[c]);
      const auto& sb = std::get<StarOpen>(b.parts[c]);
      StarOpen res;
      res.vertex = sa.vertex && sb.vertex;
      res.per_ray.reserve(sa.per_ray.size());
      for (std::size_t r = 0; r < sa.per_ray.size(); ++r)
        res.per_ray.push_back(intersect_lists(sa.per_ray[r], sb.per_ray[r]));
      out.parts.emplace_back(std::move(res));
    }
  }
  validate_open(space, out);
  return out;
}

OpenSet disjoint_union(const StratSpace& space, const OpenSet& a, const OpenSet& b) {
  if (!is_disjoint(space, a, b)) throw OverlapError("disjoint_union of overlapping opens");
  OpenSet out;
  for (std::size_t c = 0; c < a.parts.size(); ++c) {
    if (const auto* la = std::get_if<LineOpen>(&a.parts[c])) {
      out.parts.emplace_back(LineOpen{union_lists(la->intervals, std::get<LineOpen>(b.parts[c]).intervals)});
    } else if (const auto* ca = std::get_if<CircleOpen>(&a.parts[c])) {
      CircleOpen res;
      res.arcs = ca->arcs;
      const auto& cb = std::get<CircleOpen>(b.parts[c]);
      res.arcs.insert(res.arcs.end(), cb.arcs.begin(), cb.arcs.end());
      std::sort(res.arcs.begin(), res.arcs.end());
      out.parts.emplace_back(std::move(res));
    } else {
      const auto& sa = std::get<StarOpen>(a.parts[c]);
      const auto& sb = std::get<StarOpen>(b.parts[c]);
      StarOpen res;
      res.vertex = sa.vertex || sb.vertex;
      for (std::size_t r = 0; r < sa.per_ray.size(); ++r)
        res.per_ray.push_back(union_lists(sa.per_ray[r], sb.per_ray[r]));
      out.parts.emplace_back(std::move(res));
    }
  }
  validate_open(space, out);
  return out;
}

std::vector<Piece> connected_pieces(const StratSpace& space, const OpenSet& u) {
  validate_open(space, u);
  std::vector<Piece> out;
  for (std::size_t c = 0; c < u.parts.size(); ++c) {
    const int ci = static_cast<int>(c);
    if (const auto* lo = std::get_if<LineOpen>(&u.parts[c])) {
      for (const auto& iv : lo->intervals) {
        Piece p;
        p.kind = Piece::Kind::INTERVAL;
        p.comp = ci;
        p.interval = iv;
        out.push_back(std::move(p));
      }
    } else if (const auto* co = std::get_if<CircleOpen>(&u.parts[c])) {
      for (const auto& a : co->arcs) {
        Piece p;
        p.kind = Piece::Kind::ARC;
        p.comp = ci;
        p.arc = a;
        out.push_back(std::move(p));
      }
    } else {
      const auto& so = std::get<StarOpen>(u.parts[c]);
      std::size_t skip_first = 0;
      if (so.vertex) {
        Piece p;
        p.kind = Piece::Kind::VERTEX_STAR;
        p.comp = ci;
        for (const auto& ray : so.per_ray) p.germs.push_back(ray.front());
        out.push_back(std::move(p));
        skip_first = 1;
      }
      for (std::size_t r = 0; r < so.per_ray.size(); ++r)
        for (std::size_t i = skip_first; i < so.per_ray[r].size(); ++i) {
          Piece p;
          p.kind = Piece::Kind::RAY_INTERVAL;
          p.comp = ci;
          p.ray = static_cast<int>(r);
          p.interval = so.per_ray[r][i];
          out.push_back(std::move(p));
        }
    }
  }
  return out;
}

OpenSet pieces_open(const StratSpace& space, const std::vector<Piece>& pieces) {
  OpenSet u = empty_open(space);
  for (const auto& p : pieces) {
    switch (p.kind) {
      case Piece::Kind::INTERVAL:
        std::get<LineOpen>(u.parts[p.comp]).intervals.push_back(p.interval);
        break;
      case Piece::Kind::ARC:
        std::get<CircleOpen>(u.parts[p.comp]).arcs.push_back(p.arc);
        break;
      case Piece::Kind::RAY_INTERVAL:
        std::get<StarOpen>(u.parts[p.comp]).per_ray[p.ray].push_back(p.interval);
        break;
      case Piece::Kind::VERTEX_STAR: {
        auto& so = std::get<StarOpen>(u.parts[p.comp]);
        so.vertex = true;
        for (std::size_t r = 0; r < p.germs.size(); ++r) so.per_ray[r].push_back(p.germs[r]);
        break;
      }
    }
  }
  for (auto& part : u.parts) {
    if (auto* lo = std::get_if<LineOpen>(&part))
      std::sort(lo->intervals.begin(), lo->intervals.end());
    else if (auto* co = std::get_if<CircleOpen>(&part))
      std::sort(co->arcs.begin(), co->arcs.end());
    else
      for (auto& ray : std::get<StarOpen>(part).per_ray) std::sort(ray.begin(), ray.end());
  }
  validate_open(space, u);
  return u;
}

OpenSet piece_open(const StratSpace& space, const Piece& piece) { return pieces_open(space, {piece}); }

bool operator==(const DiskType& a, const DiskType& b) { return a.k == b.k; }
bool operator<(const DiskType& a, const DiskType& b) { return a.k < b.k; }

std::optional<std::vector<DiskType>> classify_multidisk(const StratSpace& space, const OpenSet& u) {
  std::vector<DiskType> out;
  for (const auto& p : connected_pieces(space, u)) {
    switch (p.kind) {
      case Piece::Kind::INTERVAL: {
        const auto& marks = std::get<LineComp>(space.components[p.comp]).marks;
        int inside = 0;
        for (const auto& m : marks)
          if (p.interval.lo < m && m < p.interval.hi) ++inside;
        if (inside >= 2) return std::nullopt;
        out.push_back(DiskType{inside == 0 ? 0 : 2});
        break;
      }
      case Piece::Kind::ARC: {
        const auto& cc = std::get<CircleComp>(space.components[p.comp]);
        int inside = 0;
        for (const auto& m : cc.marks)
          if (arc_contains_angle(p.arc, m, cc.circumference)) ++inside;
        if (inside >= 2) return std::nullopt;
        out.push_back(DiskType{inside == 0 ? 0 : 2});
        break;
      }
      case Piece::Kind::RAY_INTERVAL:
        out.push_back(DiskType{0});
        break;
      case Piece::Kind::VERTEX_STAR:
        out.push_back(DiskType{std::get<StarComp>(space.components[p.comp]).rays});
        break;
    }
  }
  return out;
}

namespace {

bool piece_contains(const StratSpace& space, const Piece& outer, const Piece& inner) {
  if (outer.comp != inner.comp) return false;
  if (outer.kind == Piece::Kind::INTERVAL && inner.kind == Piece::Kind::INTERVAL)
    return outer.interval.lo <= inner.interval.lo && inner.interval.hi <= outer.interval.hi;
  if (outer.kind == Piece::Kind::ARC && inner.kind == Piece::Kind::ARC)
    return arc_contains_arc(outer.arc, inner.arc, circ(space.components[outer.comp]));
  if (outer.kind == Piece::Kind::RAY_INTERVAL && inner.kind == Piece::Kind::RAY_INTERVAL)
    return outer.ray == inner.ray && outer.interval.lo <= inner.interval.lo &&
           inner.interval.hi <= outer.interval.hi;
  if (outer.kind == Piece::Kind::VERTEX_STAR && inner.kind == Piece::Kind::RAY_INTERVAL)
    return inner.interval.hi <= outer.germs[inner.ray].hi;
  if (outer.kind == Piece::Kind::VERTEX_STAR && inner.kind == Piece::Kind::VERTEX_STAR) {
    for (std::size_t r = 0; r < outer.germs.size(); ++r)
      if (!(inner.germs[r].hi <= outer.germs[r].hi)) return false;
    return true;
  }
  return false;
}

}  // namespace

std::vector<int> piece_containment_map(const StratSpace& space, const OpenSet& u, const OpenSet& v) {
  if (!is_subset(space, u, v)) throw NotContained("piece containment requires u subset v");
  const auto pu = connected_pieces(space, u);
  const auto pv = connected_pieces(space, v);
  std::vector<int> map;
  map.reserve(pu.size());
  for (const auto& a : pu) {
    int target = -1;
    for (std::size_t j = 0; j < pv.size(); ++j)
      if (piece_contains(space, pv[j], a)) {
        target = static_cast<int>(j);
        break;
      }
    if (target < 0) throw NotContained("piece of u not inside any piece of v");
    map.push_back(target);
  }
  return map;
}

bool is_iso_inclusion(const StratSpace& space, const OpenSet& u, const OpenSet& v) {
  const auto tu = classify_multidisk(space, u);
  const auto tv = classify_multidisk(space, v);
  if (!tu || !tv) throw NotDisks("is_iso_inclusion needs multidisks");
  const auto map = piece_containment_map(space, u, v);
  if (tu->size() != tv->size()) return false;
  std::vector<char> hit(tv->size(), 0);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (hit[map[i]]) return false;  // two components land in one target
    hit[map[i]] = 1;
    if (!((*tu)[i] == (*tv)[map[i]])) return false;
  }
  return true;
}

Universe::Universe(StratSpace space_, std::vector<OpenSet> opens_)
    : space(std::move(space_)), opens(std::move(opens_)) {
  for (const auto& u : opens) validate_open(space, u);
  std::sort(opens.begin(), opens.end());
  opens.erase(std::unique(opens.begin(), opens.end()), opens.end());
}

bool Universe::contains(const OpenSet& u) const {
  return std::binary_search(opens.begin(), opens.end(), u);
}

Universe close_intersections(const Universe& un) {
  std::set<OpenSet> all(un.opens.begin(), un.opens.end());
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<OpenSet> snapshot(all.begin(), all.end());
    for (std::size_t i = 0; i < snapshot.size(); ++i)
      for (std::size_t j = i + 1; j < snapshot.size(); ++j) {
        OpenSet w = intersect(un.space, snapshot[i], snapshot[j]);
        if (!is_empty(w) && all.insert(std::move(w)).second) grew = true;
      }
  }
  return Universe(un.space, std::vector<OpenSet>(all.begin(), all.end()));
}

Universe close_disjoint_unions(const Universe& un) {
  std::set<OpenSet> all(un.opens.begin(), un.opens.end());
  all.insert(empty_open(un.space));
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<OpenSet> snapshot(all.begin(), all.end());
    for (std::size_t i = 0; i < snapshot.size(); ++i)
      for (std::size_t j = i + 1; j < snapshot.size(); ++j) {
        if (!is_disjoint(un.space, snapshot[i], snapshot[j])) continue;
        OpenSet w = disjoint_union(un.space, snapshot[i], snapshot[j]);
        if (all.insert(std::move(w)).second) grew = true;
      }
  }
  return Universe(un.space, std::vector<OpenSet>(all.begin(), all.end()));
}

std::function<bool(const OpenSet&)> sieve_predicate(const Universe& un) {
  return [un](const OpenSet& q) {
    for (const auto& o : un.opens)
      if (is_subset(un.space, q, o)) return true;
    return false;
  };
}

bool operator==(const Point& a, const Point& b) {
  return a.kind == b.kind && a.comp == b.comp && a.x == b.x && a.ray == b.ray;
}
bool operator<(const Point& a, const Point& b) {
  if (a.comp != b.comp) return a.comp < b.comp;
  if (a.kind != b.kind) return a.kind < b.kind;
  if (a.ray != b.ray) return a.ray < b.ray;
  return a.x < b.x;
}

std::string point_to_string(const Point& p) {
  std::ostringstream os;
  os << "c" << p.comp;
  switch (p.kind) {
    case Point::Kind::LINE: os << " x=" << rat_to_string(p.x); break;
    case Point::Kind::CIRCLE: os << " theta=" << rat_to_string(p.x); break;
    case Point::Kind::RAY: os << " ray=" << p.ray << " r=" << rat_to_string(p.x); break;
    case Point::Kind::VERTEX: os << " vertex"; break;
  }
  return os.str();
}

bool contains_point(const StratSpace& space, const OpenSet& u, const Point& p) {
  if (p.comp < 0 || p.comp >= static_cast<int>(space.components.size()))
    throw BadOpen("point component out of range");
  const auto& part = u.parts[p.comp];
  switch (p.kind) {
    case Point::Kind::LINE: {
      const auto& lo = std::get<LineOpen>(part);
      for (const auto& iv : lo.intervals)
        if (iv.lo < p.x && p.x < iv.hi) return true;
      return false;
    }
    case Point::Kind::CIRCLE: {
      const auto& co = std::get<CircleOpen>(part);
      const Rat& L = circ(space.components[p.comp]);
      for (const auto& a : co.arcs)
        if (arc_contains_angle(a, p.x, L)) return true;
      return false;
    }
    case Point::Kind::RAY: {
      const auto& so = std::get<StarOpen>(part);
      for (const auto& iv : so.per_ray[p.ray])
        if (iv.lo < p.x && p.x < iv.hi) return true;
      return false;
    }
    case Point::Kind::VERTEX:
      return std::get<StarOpen>(part).vertex;
  }
  return false;
}

namespace {

BigInt rat_floor(const Rat& r) {
  const BigInt num = numerator(r), den = denominator(r);
  BigInt q = num / den;
  if (num % den != 0 && num < 0) --q;
  return q;
}

void rationals_in(const Rat& lo, const Rat& hi, int bound, std::set<Rat>& out) {
  for (int den = 1; den <= bound; ++den) {
    for (BigInt n = rat_floor(lo * den) + 1;; ++n) {
      const Rat v(n, BigInt(den));
      if (!(v < hi)) break;
      if (lo < v) out.insert(v);
    }
  }
}

}  // namespace

std::vector<Point> grid_points(const StratSpace& space, const OpenSet& u, int denom_bound) {
  validate_open(space, u);
  std::vector<Point> out;
  for (std::size_t c = 0; c < u.parts.size(); ++c) {
    const int ci = static_cast<int>(c);
    if (const auto* lo = std::get_if<LineOpen>(&u.parts[c])) {
      std::set<Rat> xs;
      for (const auto& iv : lo->intervals) rationals_in(iv.lo, iv.hi, denom_bound, xs);
      for (const auto& m : std::get<LineComp>(space.components[c]).marks)
        if (contains_point(space, u, Point{Point::Kind::LINE, ci, m, -1})) xs.insert(m);
      for (const auto& x : xs) out.push_back(Point{Point::Kind::LINE, ci, x, -1});
    } else if (const auto* co = std::get_if<CircleOpen>(&u.parts[c])) {
      const auto& cc = std::get<CircleComp>(space.components[c]);
      std::set<Rat> thetas;
      for (const auto& a : co->arcs) {
        std::set<Rat> lifted;
        rationals_in(a.start, a.end, denom_bound, lifted);
        for (Rat t : lifted) {
          if (t >= cc.circumference) t -= cc.circumference;
          thetas.insert(t);
        }
      }
      for (const auto& m : cc.marks)
        if (contains_point(space, u, Point{Point::Kind::CIRCLE, ci, m, -1})) thetas.insert(m);
      for (const auto& t : thetas) out.push_back(Point{Point::Kind::CIRCLE, ci, t, -1});
    } else {
      const auto& so = std::get<StarOpen>(u.parts[c]);
      if (so.vertex) out.push_back(Point{Point::Kind::VERTEX, ci, Rat(0), -1});
      for (std::size_t r = 0; r < so.per_ray.size(); ++r) {
        std::set<Rat> radii;
        for (const auto& iv : so.per_ray[r]) rationals_in(iv.lo, iv.hi, denom_bound, radii);
        for (const auto& x : radii)
          out.push_back(Point{Point::Kind::RAY, ci, x, static_cast<int>(r)});
      }
    }
  }
  return out;
}

PredicateReport basis_predicate(const Universe& basis, const Universe& ambient, BasisMode mode,
                                int grid) {
  PredicateReport report;
  const auto in_sieve = sieve_predicate(ambient);
  for (const auto& b : basis.opens)
    if (!is_empty(b) && !in_sieve(b))
      throw BadConfiguration("basis open not subordinate to the ambient universe");

  if (mode == BasisMode::decomposable) {
    for (const auto& u : basis.opens) {
      const auto pieces = connected_pieces(basis.space, u);
      const std::size_t n = pieces.size();
      if (n < 2) continue;
      if (n > 12) throw BadConfiguration("too many components for decomposability scan");
      for (std::size_t mask = 1; mask + 1 < (std::size_t(1) << n); ++mask) {
        std::vector<Piece> sub;
        for (std::size_t i = 0; i < n; ++i)
          if (mask & (std::size_t(1) << i)) sub.push_back(pieces[i]);
        const OpenSet w = pieces_open(basis.space, sub);
        if (!basis.contains(w)) {
          report.ok = false;
          report.witness = "summand of a listed open is missing from the basis";
          return report;
        }
      }
    }
    return report;
  }

  // multiplicative core: basis condition at grid points of every ambient open
  for (std::size_t vi = 0; vi < ambient.opens.size(); ++vi) {
    const OpenSet& v = ambient.opens[vi];
    for (const auto& p : grid_points(ambient.space, v, grid)) {
      bool found = false;
      for (const auto& b : basis.opens)
        if (contains_point(basis.space, b, p) && is_subset(basis.space, b, v)) {
          found = true;
          break;
        }
      if (!found) {
        report.ok = false;
        report.witness = "no basis element through point " + point_to_string(p) +
                         " inside ambient open #" + std::to_string(vi);
        return report;
      }
    }
  }
  // closure under disjoint unions subordinate to an ambient open
  for (std::size_t i = 0; i < basis.opens.size(); ++i)
    for (std::size_t j = i + 1; j < basis.opens.size(); ++j) {
      if (!is_disjoint(basis.space, basis.opens[i], basis.opens[j])) continue;
      const OpenSet w = disjoint_union(basis.space, basis.opens[i], basis.opens[j]);
      if (!in_sieve(w)) continue;  // not subordinate; closure not required
      if (!basis.contains(w)) {
        report.ok = false;
        report.witness = "disjoint union of basis opens #" + std::to_string(i) + ", #" +
                         std::to_string(j) + " is subordinate but unlisted";
        return report;
      }
    }
  if (mode == BasisMode::factorizing) {
    for (std::size_t i = 0; i < basis.opens.size(); ++i)
      for (std::size_t j = i + 1; j < basis.opens.size(); ++j) {
        const OpenSet w = intersect(basis.space, basis.opens[i], basis.opens[j]);
        if (is_empty(w) || basis.contains(w)) continue;
        report.ok = false;
        report.witness = "intersection of basis opens #" + std::to_string(i) + ", #" +
                         std::to_string(j) + " is unlisted";
        return report;
      }
  }
  return report;
}

WeissResult is_weiss_cover(const StratSpace& space, const std::vector<OpenSet>& cover,
                           const OpenSet& u, int grid, int s_max) {
  if (cover.empty()) throw EmptyCover("weiss cover check needs at least one member");
  for (const auto& m : cover)
    if (!is_subset(space, m, u)) throw BadConfiguration("cover member not contained in the open");
  const auto points = grid_points(space, u, grid);
  const int n = static_cast<int>(points.size());

  WeissResult res;
  res.certificate = "weiss-up-to(grid=" + std::to_string(grid) + ",s_max=" + std::to_string(s_max) + ")";
  // enumerate subsets of size 1..s_max
  std::vector<int> idx;
  const std::function<bool(int, int)> scan = [&](int start, int remaining) -> bool {
    if (!idx.empty()) {
      bool covered = false;
      for (const auto& m : cover) {
        bool all = true;
        for (const int i : idx)
          if (!contains_point(space, m, points[i])) {
            all = false;
            break;
          }
        if (all) {
          covered = true;
          break;
        }
      }
      if (!covered) {
        for (const int i : idx) res.missing.push_back(points[i]);
        return false;
      }
    }
    if (remaining == 0) return true;
    for (int i = start; i < n; ++i) {
      idx.push_back(i);
      if (!scan(i + 1, remaining - 1)) return false;
      idx.pop_back();
    }
    return true;
  };
  res.ok = scan(0, s_max);
  return res;
}

WeissResult weiss_compl_compact(const StratSpace& space, const OpenSet& u) {
  validate_open(space, u);
  WeissResult res;
  res.ok = true;
  res.certificate = "exact(complement-of-compact-family)";
  return res;
}

MapDescriptor MapDescriptor::cone_proj(int rays) {
  MapDescriptor m;
  m.kind = MapKind::CONE_PROJ;
  m.source = StratSpace::star(rays);
  m.target = StratSpace::star(1);
  return m;
}

MapDescriptor MapDescriptor::fold(const StratSpace& base, int n) {
  if (n < 1) throw UnsupportedMap("fold needs at least one copy");
  MapDescriptor m;
  m.kind = MapKind::FOLD;
  m.copies = n;
  m.target = base;
  std::vector<Component> comps;
  for (int i = 0; i < n; ++i)
    comps.insert(comps.end(), base.components.begin(), base.components.end());
  m.source = StratSpace(std::move(comps));
  return m;
}

MapDescriptor MapDescriptor::circle_vproj(const Rat& circumference, const Rat& s1, const Rat& s2) {
  if (!(s1 < s2)) throw UnsupportedMap("circle projection needs s1 < s2");
  MapDescriptor m;
  m.kind = MapKind::CIRCLE_VPROJ;
  m.s1 = s1;
  m.s2 = s2;
  m.source = StratSpace::circle(circumference, {Rat(0), circumference / 2});
  m.target = StratSpace::line({s1, s2});
  return m;
}

MapDescriptor MapDescriptor::square(bool marked_target) {
  MapDescriptor m;
  m.kind = MapKind::SQUARE;
  m.source = StratSpace::star(2);
  m.target = marked_target ? StratSpace::star(2) : StratSpace::line({});
  return m;
}

OpenSet preimage(const MapDescriptor& m, const OpenSet& v) {
  validate_open(m.target, v);
  OpenSet out = empty_open(m.source);
  switch (m.kind) {
    case MapKind::CONE_PROJ: {
      const auto& sv = std::get<StarOpen>(v.parts[0]);
      auto& so = std::get<StarOpen>(out.parts[0]);
      so.vertex = sv.vertex;
      for (auto& ray : so.per_ray) ray = sv.per_ray[0];
      break;
    }
    case MapKind::FOLD: {
      out.parts.clear();
      for (int i = 0; i < m.copies; ++i)
        out.parts.insert(out.parts.end(), v.parts.begin(), v.parts.end());
      break;
    }
    case MapKind::CIRCLE_VPROJ: {
      const Rat L = circ(m.source.components[0]);
      const auto t = [&](const Rat& y) { return (y - m.s1) * L / (2 * (m.s2 - m.s1)); };
      auto& co = std::get<CircleOpen>(out.parts[0]);
      for (const auto& iv : std::get<LineOpen>(v.parts[0]).intervals) {
        if (iv.hi <= m.s1 || iv.lo >= m.s2) continue;
        const bool c1 = iv.lo < m.s1, c2 = iv.hi > m.s2;
        if (c1 && c2)
          throw UnsupportedMap("interval containing both projected marks pulls back to the full circle");
        if (c1) {
          const Rat tb = t(iv.hi);
          co.arcs.push_back({L - tb, L + tb});
        } else if (c2) {
          const Rat ta = t(iv.lo);
          if (ta == 0)
            co.arcs.push_back({Rat(0), L});
          else
            co.arcs.push_back({ta, L - ta});
        } else {
          const Rat ta = t(iv.lo), tb = t(iv.hi);
          co.arcs.push_back({ta, tb});
          co.arcs.push_back({L - tb, L - ta});
        }
      }
      std::sort(co.arcs.begin(), co.arcs.end());
      break;
    }
    case MapKind::SQUARE: {
      auto& so = std::get<StarOpen>(out.parts[0]);
      if (std::holds_alternative<StarComp>(m.target.components[0])) {
        const auto& sv = std::get<StarOpen>(v.parts[0]);
        so.vertex = sv.vertex;
        so.per_ray[0] = sv.per_ray[1];
        so.per_ray[1] = sv.per_ray[1];
      } else {
        for (const auto& iv : std::get<LineOpen>(v.parts[0]).intervals) {
          if (iv.hi <= 0) continue;
          if (iv.lo < 0) {
            so.vertex = true;
            so.per_ray[0].push_back({Rat(0), iv.hi});
            so.per_ray[1].push_back({Rat(0), iv.hi});
          } else {
            so.per_ray[0].push_back(iv);
            so.per_ray[1].push_back(iv);
          }
        }
      }
      break;
    }
  }
  validate_open(m.source, out);
  return out;
}

Point apply_map(const MapDescriptor& m, const Point& p) {
  switch (m.kind) {
    case MapKind::CONE_PROJ:
      if (p.kind == Point::Kind::VERTEX) return p;
      return Point{Point::Kind::RAY, 0, p.x, 0};
    case MapKind::FOLD: {
      Point q = p;
      q.comp = p.comp % static_cast<int>(m.target.components.size());
      return q;
    }
    case MapKind::CIRCLE_VPROJ: {
      const Rat L = circ(m.source.components[0]);
      const Rat theta = p.x <= L / 2 ? p.x : L - p.x;
      return Point{Point::Kind::LINE, 0, m.s1 + (m.s2 - m.s1) * 2 * theta / L, -1};
    }
    case MapKind::SQUARE: {
      const bool marked = std::holds_alternative<StarComp>(m.target.components[0]);
      if (p.kind == Point::Kind::VERTEX)
        return marked ? p : Point{Point::Kind::LINE, 0, Rat(0), -1};
      return marked ? Point{Point::Kind::RAY, 0, p.x, 1} : Point{Point::Kind::LINE, 0, p.x, -1};
    }
  }
  throw UnsupportedMap("unknown map kind");
}

}  // namespace factline
