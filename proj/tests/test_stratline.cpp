#include <doctest.h>

#include <factline/finposet.hpp>
#include <factline/stratline.hpp>

#include <algorithm>
#include <random>
#include <set>
#include <vector>

using namespace factline;

namespace {

OpenSet line_open(const StratSpace& space, std::vector<Interval> ivs) {
  OpenSet u = empty_open(space);
  std::sort(ivs.begin(), ivs.end());
  std::get<LineOpen>(u.parts[0]) = LineOpen{std::move(ivs)};
  return u;
}

OpenSet star_open(const StratSpace& space, StarOpen so) {
  OpenSet u = empty_open(space);
  std::get<StarOpen>(u.parts[0]) = std::move(so);
  return u;
}

OpenSet circle_open(const StratSpace& space, std::vector<Arc> arcs) {
  OpenSet u = empty_open(space);
  std::sort(arcs.begin(), arcs.end());
  std::get<CircleOpen>(u.parts[0]) = CircleOpen{std::move(arcs)};
  return u;
}

Rat rr(long n, long d = 1) { return Rat(n, d); }

Rat random_rat(std::mt19937_64& rng, long lo_num, long hi_num, long max_den) {
  std::uniform_int_distribution<long> den(1, max_den);
  const long d = den(rng);
  std::uniform_int_distribution<long> num(lo_num * d, hi_num * d);
  return Rat(num(rng), d);
}

std::vector<Interval> random_interval_list(std::mt19937_64& rng, long lo, long hi, int max_count) {
  std::uniform_int_distribution<int> count(0, max_count);
  const int k = count(rng);
  std::set<Rat> ends;
  while (static_cast<int>(ends.size()) < 2 * k) ends.insert(random_rat(rng, lo, hi, 4));
  std::vector<Rat> sorted(ends.begin(), ends.end());
  std::vector<Interval> out;
  for (int i = 0; i < k; ++i) out.push_back({sorted[2 * i], sorted[2 * i + 1]});
  return out;
}

OpenSet random_open(const StratSpace& space, std::mt19937_64& rng) {
  OpenSet u = empty_open(space);
  for (std::size_t c = 0; c < space.components.size(); ++c) {
    if (std::holds_alternative<LineComp>(space.components[c])) {
      std::get<LineOpen>(u.parts[c]).intervals = random_interval_list(rng, -6, 6, 3);
    } else if (const auto* cc = std::get_if<CircleComp>(&space.components[c])) {
      const Rat L = cc->circumference;
      std::uniform_int_distribution<int> count(0, 2);
      const int k = count(rng);
      if (k > 0) {
        std::set<Rat> angles;
        while (static_cast<int>(angles.size()) < 2 * k) {
          Rat a = random_rat(rng, 0, 12, 4);
          a -= (a / L).convert_to<boost::multiprecision::cpp_int>() * L;
          if (a < 0) a += L;
          if (a < L) angles.insert(a);
        }
        std::vector<Rat> s(angles.begin(), angles.end());
        auto& arcs = std::get<CircleOpen>(u.parts[c]).arcs;
        for (int i = 0; i < k; ++i) arcs.push_back({s[2 * i], s[2 * i + 1]});
        // sometimes wrap the last arc past L, staying clear of the first
        std::uniform_int_distribution<int> coin(0, 2);
        if (coin(rng) == 0 && s[0] > 0) arcs.back().end = L + s[0] / 2;
      }
    } else {
      const int rays = std::get<StarComp>(space.components[c]).rays;
      auto& so = std::get<StarOpen>(u.parts[c]);
      so.per_ray.assign(rays, {});
      for (int r = 0; r < rays; ++r) so.per_ray[r] = random_interval_list(rng, 0, 5, 2);
      std::uniform_int_distribution<int> coin(0, 2);
      if (coin(rng) == 0) {
        so.vertex = true;
        for (auto& ray : so.per_ray) {
          const Rat cap = ray.empty() ? rr(1) : ray.front().lo;
          if (cap == 0) {
            // first interval already starts at the vertex; promote it to the germ
            continue;
          }
          ray.insert(ray.begin(), Interval{rr(0), cap / 2});
        }
      }
    }
  }
  validate_open(space, u);
  return u;
}

// every rational point of the space with coordinate denominator <= den_bound,
// coordinates in (-radius, radius) (lines) or (0, radius) (rays)
std::vector<Point> all_points(const StratSpace& space, int den_bound, long radius) {
  std::vector<Point> out;
  for (std::size_t c = 0; c < space.components.size(); ++c) {
    const int ci = static_cast<int>(c);
    if (const auto* lc = std::get_if<LineComp>(&space.components[c])) {
      std::set<Rat> xs(lc->marks.begin(), lc->marks.end());
      for (int d = 1; d <= den_bound; ++d)
        for (long n = -radius * d + 1; n < radius * d; ++n) xs.insert(Rat(n, d));
      for (const auto& x : xs) out.push_back({Point::Kind::LINE, ci, x, -1});
    } else if (const auto* cc = std::get_if<CircleComp>(&space.components[c])) {
      std::set<Rat> xs(cc->marks.begin(), cc->marks.end());
      for (int d = 1; d <= den_bound; ++d)
        for (long n = 0; Rat(n, d) < cc->circumference; ++n) xs.insert(Rat(n, d));
      for (const auto& x : xs) out.push_back({Point::Kind::CIRCLE, ci, x, -1});
    } else {
      out.push_back({Point::Kind::VERTEX, ci, rr(0), -1});
      const int rays = std::get<StarComp>(space.components[c]).rays;
      for (int r = 0; r < rays; ++r)
        for (int d = 1; d <= den_bound; ++d)
          for (long n = 1; n < radius * d; ++n)
            out.push_back({Point::Kind::RAY, ci, Rat(n, d), r});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("space construction canonicalizes and validates") {
  const StratSpace one_mark = StratSpace::line({rr(3)});
  REQUIRE(one_mark.components.size() == 1);
  CHECK(std::holds_alternative<StarComp>(one_mark.components[0]));
  CHECK(std::get<StarComp>(one_mark.components[0]).rays == 2);
  CHECK(one_mark == StratSpace::star(2));

  const StratSpace two_marks = StratSpace::line({rr(0), rr(1)});
  CHECK(std::holds_alternative<LineComp>(two_marks.components[0]));

  CHECK_THROWS_AS(StratSpace::line({rr(1), rr(0)}), BadOpen);
  CHECK_THROWS_AS(StratSpace::circle(rr(0)), BadOpen);
  CHECK_THROWS_AS(StratSpace::circle(rr(4), {rr(5)}), BadOpen);
  CHECK_THROWS_AS(StratSpace::star(0), BadOpen);

  const StratSpace both = StratSpace::disjoint(StratSpace::line({}), StratSpace::star(3));
  CHECK(both.components.size() == 2);
}

TEST_CASE("open validation enforces shape and disjointness") {
  const StratSpace line = StratSpace::line({});
  CHECK_NOTHROW(validate_open(line, line_open(line, {{rr(0), rr(1)}, {rr(1), rr(2)}})));
  CHECK_THROWS_AS(validate_open(line, line_open(line, {{rr(0), rr(2)}, {rr(1), rr(3)}})), BadOpen);
  CHECK_THROWS_AS(validate_open(line, line_open(line, {{rr(1), rr(1)}})), BadOpen);

  OpenSet wrong_kind;
  wrong_kind.parts.emplace_back(StarOpen{{{}, {}}, false});
  CHECK_THROWS_AS(validate_open(line, wrong_kind), BadOpen);

  const StratSpace star = StratSpace::star(2);
  StarOpen no_germ;
  no_germ.per_ray = {{{rr(1), rr(2)}}, {{rr(0), rr(1)}}};
  no_germ.vertex = true;
  CHECK_THROWS_AS(validate_open(star, star_open(star, no_germ)), BadOpen);
  no_germ.per_ray[0] = {{rr(0), rr(2)}};
  CHECK_NOTHROW(validate_open(star, star_open(star, no_germ)));

  const StratSpace circle = StratSpace::circle(rr(4));
  CHECK_NOTHROW(validate_open(circle, circle_open(circle, {{rr(3), rr(5)}, {rr(1), rr(2)}})));
  // wrap portion of (3, 5+1/2) covers (0, 3/2) which meets (1, 2)
  CHECK_THROWS_AS(validate_open(circle, circle_open(circle, {{rr(1), rr(2)}, {rr(3), rr(11, 2)}})),
                  BadOpen);
  CHECK_THROWS_AS(validate_open(circle, circle_open(circle, {{rr(0), rr(5)}})), BadOpen);
  // full circle minus a point is the longest representable arc
  CHECK_NOTHROW(validate_open(circle, circle_open(circle, {{rr(1), rr(5)}})));
}

TEST_CASE("boolean operations on worked examples") {
  const StratSpace line = StratSpace::line({});
  const OpenSet a = line_open(line, {{rr(0), rr(2)}});
  const OpenSet b = line_open(line, {{rr(1), rr(3)}});
  CHECK(intersect(line, a, b) == line_open(line, {{rr(1), rr(2)}}));
  CHECK(intersect(line, a, empty_open(line)) == empty_open(line));
  CHECK(is_empty(intersect(line, a, empty_open(line))));

  const StratSpace star = StratSpace::star(3);
  StarOpen vx;
  vx.vertex = true;
  vx.per_ray = {{{rr(0), rr(1)}}, {{rr(0), rr(1)}}, {{rr(0), rr(1)}}};
  StarOpen ray1;
  ray1.per_ray = {{}, {{rr(1, 2), rr(2)}}, {}};
  const OpenSet meet = intersect(star, star_open(star, vx), star_open(star, ray1));
  StarOpen expect;
  expect.per_ray = {{}, {{rr(1, 2), rr(1)}}, {}};
  CHECK(meet == star_open(star, expect));
  CHECK_FALSE(std::get<StarOpen>(meet.parts[0]).vertex);

  CHECK_THROWS_AS(disjoint_union(line, a, b), OverlapError);
  const OpenSet c = line_open(line, {{rr(5), rr(6)}});
  const OpenSet u = disjoint_union(line, a, c);
  CHECK(u == line_open(line, {{rr(0), rr(2)}, {rr(5), rr(6)}}));
  CHECK(is_subset(line, a, u));
  CHECK(intersect(line, u, a) == a);
}

TEST_CASE("intersection laws on random opens") {
  const std::vector<StratSpace> spaces = {
      StratSpace::line({rr(0), rr(2)}),
      StratSpace::circle(rr(4), {rr(1)}),
      StratSpace::star(3),
      StratSpace::disjoint(StratSpace::line({}), StratSpace::star(2)),
  };
  std::mt19937_64 rng(2026'08'01);
  for (const auto& space : spaces) {
    for (int trial = 0; trial < 60; ++trial) {
      const OpenSet a = random_open(space, rng);
      const OpenSet b = random_open(space, rng);
      const OpenSet c = random_open(space, rng);
      CHECK(intersect(space, a, a) == a);
      CHECK(intersect(space, a, b) == intersect(space, b, a));
      CHECK(intersect(space, intersect(space, a, b), c) ==
            intersect(space, a, intersect(space, b, c)));
      CHECK(is_subset(space, intersect(space, a, b), a));
      CHECK(is_subset(space, intersect(space, a, b), b));
      CHECK(is_disjoint(space, a, b) == is_empty(intersect(space, a, b)));
      if (is_disjoint(space, a, b)) {
        const OpenSet u = disjoint_union(space, a, b);
        CHECK(is_subset(space, a, u));
        CHECK(is_subset(space, b, u));
        CHECK(intersect(space, u, a) == a);
        CHECK(intersect(space, u, b) == b);
      }
    }
  }
}

TEST_CASE("connected pieces round-trip and canonical order") {
  const StratSpace space = StratSpace::disjoint(StratSpace::star(2), StratSpace::line({}));
  StarOpen so;
  so.vertex = true;
  so.per_ray = {{{rr(0), rr(1)}, {rr(2), rr(3)}}, {{rr(0), rr(1, 2)}}};
  OpenSet u = empty_open(space);
  std::get<StarOpen>(u.parts[0]) = so;
  std::get<LineOpen>(u.parts[1]).intervals = {{rr(-1), rr(0)}, {rr(4), rr(5)}};

  const auto pieces = connected_pieces(space, u);
  REQUIRE(pieces.size() == 4);
  CHECK(pieces[0].kind == Piece::Kind::VERTEX_STAR);
  CHECK(pieces[1].kind == Piece::Kind::RAY_INTERVAL);
  CHECK(pieces[1].ray == 0);
  CHECK(pieces[1].interval == Interval{rr(2), rr(3)});
  CHECK(pieces[2].kind == Piece::Kind::INTERVAL);
  CHECK(pieces[2].comp == 1);
  CHECK(pieces[3].interval == Interval{rr(4), rr(5)});

  CHECK(pieces_open(space, pieces) == u);

  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const OpenSet w = random_open(space, rng);
    CHECK(pieces_open(space, connected_pieces(space, w)) == w);
  }
}

TEST_CASE("multidisk classification") {
  const StratSpace line = StratSpace::line({});
  const auto t1 = classify_multidisk(line, line_open(line, {{rr(0), rr(1)}}));
  REQUIRE(t1.has_value());
  CHECK(*t1 == std::vector<DiskType>{DiskType{0}});

  // one-mark line is canonically a 2-ray star; its vertex opens are 2-cones
  const StratSpace marked = StratSpace::line({rr(0)});
  const OpenSet sym = star_open(marked, star2_from_line_intervals(rr(0), {{rr(-1), rr(1)}}));
  const auto t2 = classify_multidisk(marked, sym);
  REQUIRE(t2.has_value());
  CHECK(*t2 == std::vector<DiskType>{DiskType{2}});

  StarOpen vx3;
  vx3.vertex = true;
  vx3.per_ray = {{{rr(0), rr(1)}}, {{rr(0), rr(1)}}, {{rr(0), rr(1)}}};
  const StratSpace star3 = StratSpace::star(3);
  const auto t3 = classify_multidisk(star3, star_open(star3, vx3));
  REQUIRE(t3.has_value());
  CHECK(*t3 == std::vector<DiskType>{DiskType{3}});

  const StratSpace two_marks = StratSpace::line({rr(0), rr(1)});
  CHECK_FALSE(classify_multidisk(two_marks, line_open(two_marks, {{rr(-1), rr(2)}})).has_value());
  const auto t4 = classify_multidisk(two_marks, line_open(two_marks, {{rr(-1), rr(1, 2)}}));
  REQUIRE(t4.has_value());
  CHECK(*t4 == std::vector<DiskType>{DiskType{2}});

  const StratSpace circle = StratSpace::circle(rr(4), {rr(0)});
  const auto t5 = classify_multidisk(circle, circle_open(circle, {{rr(3), rr(5)}}));
  REQUIRE(t5.has_value());
  CHECK(*t5 == std::vector<DiskType>{DiskType{2}});
  const auto t6 = classify_multidisk(circle, circle_open(circle, {{rr(1), rr(3)}}));
  REQUIRE(t6.has_value());
  CHECK(*t6 == std::vector<DiskType>{DiskType{0}});

  // classification of a disjoint union is the two classifications merged
  std::mt19937_64 rng(404);
  const StratSpace space = StratSpace::disjoint(StratSpace::line({rr(0), rr(3)}), StratSpace::star(2));
  int checked = 0;
  for (int trial = 0; trial < 700; ++trial) {
    const OpenSet a = random_open(space, rng);
    const OpenSet b = random_open(space, rng);
    if (!is_disjoint(space, a, b)) continue;
    const auto ta = classify_multidisk(space, a);
    const auto tb = classify_multidisk(space, b);
    const auto tu = classify_multidisk(space, disjoint_union(space, a, b));
    if (!ta || !tb) {
      CHECK_FALSE(tu.has_value());
      continue;
    }
    REQUIRE(tu.has_value());
    std::vector<DiskType> merged = *ta;
    merged.insert(merged.end(), tb->begin(), tb->end());
    std::sort(merged.begin(), merged.end());
    std::vector<DiskType> got = *tu;
    std::sort(got.begin(), got.end());
    CHECK(got == merged);
    ++checked;
  }
  CHECK(checked >= 40);
}

TEST_CASE("iso inclusions of multidisks") {
  const StratSpace line = StratSpace::line({});
  CHECK(is_iso_inclusion(line, line_open(line, {{rr(0), rr(1)}}), line_open(line, {{rr(0), rr(2)}})));

  const StratSpace marked = StratSpace::line({rr(0)});
  const OpenSet off = star_open(marked, star2_from_line_intervals(rr(0), {{rr(1), rr(2)}}));
  const OpenSet big = star_open(marked, star2_from_line_intervals(rr(0), {{rr(-1), rr(3)}}));
  CHECK_FALSE(is_iso_inclusion(marked, off, big));  // R inside Cone(2)

  const OpenSet mid = star_open(marked, star2_from_line_intervals(rr(0), {{rr(-1), rr(1)}}));
  const OpenSet out = star_open(marked, star2_from_line_intervals(rr(0), {{rr(-2), rr(2)}}));
  CHECK(is_iso_inclusion(marked, mid, out));

  CHECK_THROWS_AS(is_iso_inclusion(marked, out, mid), NotContained);
  const StratSpace two_marks = StratSpace::line({rr(0), rr(1)});
  CHECK_THROWS_AS(is_iso_inclusion(two_marks, line_open(two_marks, {{rr(-1), rr(1, 2)}}),
                                   line_open(two_marks, {{rr(-1), rr(2)}})),
                  NotDisks);

  // reflexivity and composition on nested same-type disks
  CHECK(is_iso_inclusion(marked, mid, mid));
  const OpenSet inner = star_open(marked, star2_from_line_intervals(rr(0), {{rr(-1, 2), rr(1, 2)}}));
  CHECK(is_iso_inclusion(marked, inner, mid));
  CHECK(is_iso_inclusion(marked, inner, out));

  // two components folding into one target component is not an iso inclusion
  const OpenSet pair = line_open(line, {{rr(0), rr(1)}, {rr(1), rr(2)}});
  const OpenSet whole = line_open(line, {{rr(0), rr(2)}});
  CHECK_FALSE(is_iso_inclusion(line, pair, whole));
}

TEST_CASE("universe closures") {
  const StratSpace line = StratSpace::line({});
  const Universe start(line, {line_open(line, {{rr(0), rr(2)}}), line_open(line, {{rr(1), rr(3)}})});
  const Universe meets = close_intersections(start);
  CHECK(meets.opens.size() == 3);
  CHECK(meets.contains(line_open(line, {{rr(1), rr(2)}})));

  const Universe two(line, {line_open(line, {{rr(0), rr(1)}}), line_open(line, {{rr(2), rr(3)}})});
  const Universe unions = close_disjoint_unions(two);
  CHECK(unions.opens.size() == 4);
  CHECK(unions.contains(empty_open(line)));
  CHECK(unions.contains(line_open(line, {{rr(0), rr(1)}, {rr(2), rr(3)}})));

  const auto sieve = sieve_predicate(Universe(line, {line_open(line, {{rr(0), rr(2)}})}));
  CHECK(sieve(line_open(line, {{rr(1, 2), rr(3, 2)}})));
  CHECK_FALSE(sieve(line_open(line, {{rr(1), rr(3)}})));

  // closure-operator laws for the intersection closure
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<OpenSet> opens;
    for (int i = 0; i < 3; ++i) opens.push_back(random_open(line, rng));
    const Universe un(line, opens);
    const Universe c1 = close_intersections(un);
    const Universe c2 = close_intersections(c1);
    CHECK(c1.opens == c2.opens);
    for (const auto& o : un.opens) CHECK(c1.contains(o));
    std::vector<OpenSet> more = opens;
    more.push_back(random_open(line, rng));
    const Universe bigger = close_intersections(Universe(line, more));
    for (const auto& o : c1.opens)
      if (!is_empty(o)) CHECK(bigger.contains(o));
  }
}

TEST_CASE("grid point sampling") {
  const StratSpace line = StratSpace::line({});
  const auto g2 = grid_points(line, line_open(line, {{rr(0), rr(1)}}), 2);
  REQUIRE(g2.size() == 1);
  CHECK(g2[0].x == rr(1, 2));
  const auto g3 = grid_points(line, line_open(line, {{rr(0), rr(1)}}), 3);
  REQUIRE(g3.size() == 3);
  CHECK(g3[0].x == rr(1, 3));
  CHECK(g3[1].x == rr(1, 2));
  CHECK(g3[2].x == rr(2, 3));

  // marks are always sampled, even at coarse grids
  const StratSpace marked = StratSpace::line({rr(1, 5), rr(7, 5)});
  const auto gm = grid_points(marked, line_open(marked, {{rr(0), rr(1)}}), 1);
  bool has_mark = false;
  for (const auto& p : gm) has_mark |= (p.x == rr(1, 5));
  CHECK(has_mark);

  const StratSpace star = StratSpace::star(2);
  StarOpen vx;
  vx.vertex = true;
  vx.per_ray = {{{rr(0), rr(1)}}, {{rr(0), rr(1)}}};
  const auto gs = grid_points(star, star_open(star, vx), 2);
  bool has_vertex = false;
  for (const auto& p : gs) has_vertex |= (p.kind == Point::Kind::VERTEX);
  CHECK(has_vertex);

  // wrapped arc samples reduce into [0, L)
  const StratSpace circle = StratSpace::circle(rr(3));
  const auto gc = grid_points(circle, circle_open(circle, {{rr(2), rr(4)}}), 2);
  for (const auto& p : gc) {
    CHECK(p.x >= rr(0));
    CHECK(p.x < rr(3));
    CHECK(contains_point(circle, circle_open(circle, {{rr(2), rr(4)}}), p));
  }
  REQUIRE(gc.size() == 3);  // 5/2, 0 reduced from 3, 1/2
}

namespace {

// all disjoint unions of intervals with endpoints among the given sorted values
void enumerate_unions(const StratSpace& line, const std::vector<Rat>& ends, std::size_t from,
                      std::vector<Interval>& acc, std::vector<OpenSet>& out) {
  out.push_back(acc.empty() ? empty_open(line)
                            : line_open(line, std::vector<Interval>(acc.begin(), acc.end())));
  for (std::size_t i = from; i + 1 < ends.size(); ++i)
    for (std::size_t j = i + 1; j < ends.size(); ++j) {
      acc.push_back({ends[i], ends[j]});
      enumerate_unions(line, ends, j, acc, out);
      acc.pop_back();
    }
}

}  // namespace

TEST_CASE("basis predicates") {
  const StratSpace line = StratSpace::line({});
  const Universe ambient(line, {line_open(line, {{rr(0), rr(1)}})});

  // disjoint unions of intervals with denominator-bounded endpoints in [0,1]
  std::vector<Rat> ends;
  for (int d = 1; d <= 4; ++d)
    for (int n = 0; n <= d; ++n) ends.push_back(rr(n, d));
  std::sort(ends.begin(), ends.end());
  ends.erase(std::unique(ends.begin(), ends.end()), ends.end());
  REQUIRE(ends.size() == 7);
  std::vector<OpenSet> basis_opens;
  std::vector<Interval> acc;
  enumerate_unions(line, ends, 0, acc, basis_opens);
  REQUIRE(basis_opens.size() == 233);
  const Universe basis(line, basis_opens);

  CHECK(basis_predicate(basis, ambient, BasisMode::multiplicative, 8).ok);
  CHECK(basis_predicate(basis, ambient, BasisMode::factorizing, 8).ok);
  CHECK(basis_predicate(basis, ambient, BasisMode::decomposable, 8).ok);

  // single intervals alone are not union-closed
  std::vector<OpenSet> singles;
  for (std::size_t i = 0; i + 1 < ends.size(); ++i)
    for (std::size_t j = i + 1; j < ends.size(); ++j)
      singles.push_back(line_open(line, {{ends[i], ends[j]}}));
  const auto narrow = basis_predicate(Universe(line, singles), ambient, BasisMode::multiplicative, 8);
  CHECK_FALSE(narrow.ok);
  CHECK(narrow.witness.find("disjoint union") != std::string::npos);

  // a missing listed union is caught with that witness
  const Universe amb2(line, {line_open(line, {{rr(0), rr(1)}, {rr(2), rr(3)}})});
  const Universe miss(line, {line_open(line, {{rr(0), rr(1)}}), line_open(line, {{rr(2), rr(3)}})});
  const auto rep = basis_predicate(miss, amb2, BasisMode::multiplicative, 2);
  CHECK_FALSE(rep.ok);
  CHECK(rep.witness.find("disjoint union") != std::string::npos);
  // ...and decomposability of the same basis holds (no multi-part opens listed)
  CHECK(basis_predicate(miss, amb2, BasisMode::decomposable, 2).ok);

  // overlapping disks: multiplicative and decomposable hold, factorizing needs the meet
  const StratSpace marked2 = StratSpace::line({rr(0), rr(1)});
  const OpenSet b1 = line_open(marked2, {{rr(-1), rr(1, 2)}});
  const OpenSet b2 = line_open(marked2, {{rr(-1, 2), rr(2)}});
  const Universe disks(marked2, {b1, b2});
  CHECK(basis_predicate(disks, disks, BasisMode::multiplicative, 2).ok);
  CHECK(basis_predicate(disks, disks, BasisMode::decomposable, 2).ok);
  const auto fact = basis_predicate(disks, disks, BasisMode::factorizing, 2);
  CHECK_FALSE(fact.ok);
  CHECK(fact.witness.find("intersection") != std::string::npos);
  const Universe disks3(marked2, {b1, b2, intersect(marked2, b1, b2)});
  CHECK(basis_predicate(disks3, disks3, BasisMode::factorizing, 2).ok);

  // basis opens must sit under the ambient universe
  const Universe stray(line, {line_open(line, {{rr(5), rr(6)}})});
  CHECK_THROWS_AS(basis_predicate(stray, ambient, BasisMode::multiplicative, 2), BadConfiguration);
}

TEST_CASE("weiss cover certificates") {
  const StratSpace line = StratSpace::line({});
  const OpenSet u = line_open(line, {{rr(0), rr(3)}});

  const auto degenerate = is_weiss_cover(line, {u}, u, 2, 2);
  CHECK(degenerate.ok);
  CHECK(degenerate.certificate == "weiss-up-to(grid=2,s_max=2)");

  const auto gap = is_weiss_cover(
      line, {line_open(line, {{rr(0), rr(2)}}), line_open(line, {{rr(1), rr(3)}})}, u, 1, 2);
  CHECK_FALSE(gap.ok);
  REQUIRE(gap.missing.size() == 2);
  CHECK(gap.missing[0].x == rr(1));
  CHECK(gap.missing[1].x == rr(2));

  // the same cover is fine for singletons
  const auto single = is_weiss_cover(
      line, {line_open(line, {{rr(0), rr(2)}}), line_open(line, {{rr(1), rr(3)}})}, u, 1, 1);
  CHECK(single.ok);

  const auto exact = weiss_compl_compact(line, u);
  CHECK(exact.ok);
  CHECK(exact.certificate == "exact(complement-of-compact-family)");

  CHECK_THROWS_AS(is_weiss_cover(line, {}, u, 2, 2), EmptyCover);
  CHECK_THROWS_AS(is_weiss_cover(line, {line_open(line, {{rr(0), rr(4)}})}, u, 2, 2),
                  BadConfiguration);
}

TEST_CASE("preimages of the supported maps") {
  // radial cone projection: cylinder over the target open
  const MapDescriptor cone = MapDescriptor::cone_proj(3);
  StarOpen v1;
  v1.vertex = true;
  v1.per_ray = {{{rr(0), rr(1)}}};
  const OpenSet pre1 = preimage(cone, star_open(cone.target, v1));
  const auto& so1 = std::get<StarOpen>(pre1.parts[0]);
  CHECK(so1.vertex);
  REQUIRE(so1.per_ray.size() == 3);
  for (const auto& ray : so1.per_ray) CHECK(ray == std::vector<Interval>{{rr(0), rr(1)}});

  // fold: one copy of the open per sheet
  const MapDescriptor fold = MapDescriptor::fold(StratSpace::line({}), 2);
  const OpenSet v2 = line_open(fold.target, {{rr(0), rr(1)}});
  const OpenSet pre2 = preimage(fold, v2);
  REQUIRE(pre2.parts.size() == 2);
  CHECK(std::get<LineOpen>(pre2.parts[0]).intervals == std::get<LineOpen>(pre2.parts[1]).intervals);
  CHECK_THROWS_AS(MapDescriptor::fold(StratSpace::line({}), 0), UnsupportedMap);

  // vertical circle projection: two arcs for an interval strictly between the heights
  const MapDescriptor vproj = MapDescriptor::circle_vproj(rr(4), rr(0), rr(1));
  const OpenSet v3 = line_open(vproj.target, {{rr(1, 4), rr(3, 4)}});
  const OpenSet pre3 = preimage(vproj, v3);
  CHECK(std::get<CircleOpen>(pre3.parts[0]).arcs ==
        std::vector<Arc>{{rr(1, 2), rr(3, 2)}, {rr(5, 2), rr(7, 2)}});
  // touching the lower height: one arc through angle 0
  const OpenSet v4 = line_open(vproj.target, {{rr(-1), rr(1, 2)}});
  const OpenSet pre4 = preimage(vproj, v4);
  CHECK(std::get<CircleOpen>(pre4.parts[0]).arcs == std::vector<Arc>{{rr(3), rr(5)}});
  // touching the upper height: one arc through the far pole
  const OpenSet v5 = line_open(vproj.target, {{rr(1, 2), rr(2)}});
  const OpenSet pre5 = preimage(vproj, v5);
  CHECK(std::get<CircleOpen>(pre5.parts[0]).arcs == std::vector<Arc>{{rr(1), rr(3)}});
  // spanning both heights would need the full circle
  CHECK_THROWS_AS(preimage(vproj, line_open(vproj.target, {{rr(-1), rr(2)}})), UnsupportedMap);
  CHECK_THROWS_AS(MapDescriptor::circle_vproj(rr(4), rr(1), rr(1)), UnsupportedMap);

  // fold at the mark, unmarked target: an interval across 0 pulls back to a cone germ
  const MapDescriptor sq = MapDescriptor::square(false);
  const OpenSet w1 = preimage(sq, line_open(sq.target, {{rr(-1), rr(1)}}));
  const auto& sw1 = std::get<StarOpen>(w1.parts[0]);
  CHECK(sw1.vertex);
  CHECK(sw1.per_ray == std::vector<std::vector<Interval>>{{{rr(0), rr(1)}}, {{rr(0), rr(1)}}});
  const OpenSet w2 = preimage(sq, line_open(sq.target, {{rr(0), rr(1)}}));
  const auto& sw2 = std::get<StarOpen>(w2.parts[0]);
  CHECK_FALSE(sw2.vertex);
  CHECK(sw2.per_ray == std::vector<std::vector<Interval>>{{{rr(0), rr(1)}}, {{rr(0), rr(1)}}});
  CHECK(is_empty(preimage(sq, line_open(sq.target, {{rr(-2), rr(-1)}}))));

  // fold at the mark, marked target: ray 0 of the target is not in the image
  const MapDescriptor sqm = MapDescriptor::square(true);
  StarOpen tv;
  tv.per_ray = {{{rr(1), rr(2)}}, {}};
  CHECK(is_empty(preimage(sqm, star_open(sqm.target, tv))));
  StarOpen tv2;
  tv2.vertex = true;
  tv2.per_ray = {{{rr(0), rr(3)}}, {{rr(0), rr(1)}}};
  const OpenSet w3 = preimage(sqm, star_open(sqm.target, tv2));
  const auto& sw3 = std::get<StarOpen>(w3.parts[0]);
  CHECK(sw3.vertex);
  CHECK(sw3.per_ray == std::vector<std::vector<Interval>>{{{rr(0), rr(1)}}, {{rr(0), rr(1)}}});
}

TEST_CASE("preimage agrees with the pointwise map") {
  std::mt19937_64 rng(512);
  const std::vector<MapDescriptor> maps = {
      MapDescriptor::cone_proj(3),
      MapDescriptor::fold(StratSpace::line({rr(0), rr(2)}), 2),
      MapDescriptor::circle_vproj(rr(4), rr(0), rr(1)),
      MapDescriptor::square(false),
      MapDescriptor::square(true),
  };
  for (const auto& m : maps) {
    const auto points = all_points(m.source, 3, 5);
    int tested = 0;
    for (int trial = 0; trial < 60 && tested < 25; ++trial) {
      const OpenSet v = random_open(m.target, rng);
      OpenSet pre = empty_open(m.source);
      try {
        pre = preimage(m, v);
      } catch (const UnsupportedMap&) {
        continue;  // interval spanning both projected heights
      }
      ++tested;
      for (const auto& p : points)
        CHECK(contains_point(m.source, pre, p) == contains_point(m.target, v, apply_map(m, p)));
    }
    CHECK(tested >= 25);
  }
}

TEST_CASE("preimage preserves intersections and disjoint unions") {
  std::mt19937_64 rng(513);
  const std::vector<MapDescriptor> maps = {
      MapDescriptor::cone_proj(2),
      MapDescriptor::fold(StratSpace::star(3), 2),
      MapDescriptor::circle_vproj(rr(6), rr(-1), rr(1)),
      MapDescriptor::square(false),
      MapDescriptor::square(true),
  };
  for (const auto& m : maps) {
    int meets = 0, unions = 0;
    for (int trial = 0; trial < 300 && (meets < 30 || unions < 8); ++trial) {
      const OpenSet v1 = random_open(m.target, rng);
      const OpenSet v2 = random_open(m.target, rng);
      OpenSet p1 = empty_open(m.source), p2 = empty_open(m.source), pm = empty_open(m.source);
      try {
        p1 = preimage(m, v1);
        p2 = preimage(m, v2);
        pm = preimage(m, intersect(m.target, v1, v2));
      } catch (const UnsupportedMap&) {
        continue;
      }
      CHECK(pm == intersect(m.source, p1, p2));
      ++meets;
      if (is_disjoint(m.target, v1, v2)) {
        CHECK(is_disjoint(m.source, p1, p2));
        CHECK(preimage(m, disjoint_union(m.target, v1, v2)) == disjoint_union(m.source, p1, p2));
        ++unions;
      }
    }
    CHECK(meets >= 30);
    CHECK(unions >= 8);
  }
}

TEST_CASE("marked-line opens convert to star coordinates") {
  const auto sym = star2_from_line_intervals(rr(2), {{rr(1), rr(3)}});
  CHECK(sym.vertex);
  CHECK(sym.per_ray == std::vector<std::vector<Interval>>{{{rr(0), rr(1)}}, {{rr(0), rr(1)}}});

  const auto below = star2_from_line_intervals(rr(2), {{rr(-1), rr(1)}});
  CHECK_FALSE(below.vertex);
  CHECK(below.per_ray == std::vector<std::vector<Interval>>{{{rr(1), rr(3)}}, {}});

  const auto above = star2_from_line_intervals(rr(2), {{rr(3), rr(5)}});
  CHECK_FALSE(above.vertex);
  CHECK(above.per_ray == std::vector<std::vector<Interval>>{{}, {{rr(1), rr(3)}}});

  // touching the mark from below lands on ray 0 with the orientation reversed
  const auto touch = star2_from_line_intervals(rr(2), {{rr(0), rr(2)}});
  CHECK_FALSE(touch.vertex);
  CHECK(touch.per_ray == std::vector<std::vector<Interval>>{{{rr(0), rr(2)}}, {}});

  const auto multi = star2_from_line_intervals(rr(0), {{rr(-3), rr(-2)}, {rr(1), rr(2)}, {rr(-1), rr(1, 2)}});
  CHECK(multi.vertex);
  CHECK(multi.per_ray ==
        std::vector<std::vector<Interval>>{{{rr(0), rr(1)}, {rr(2), rr(3)}}, {{rr(0), rr(1, 2)}, {rr(1), rr(2)}}});
}
