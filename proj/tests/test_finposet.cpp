#include <doctest.h>

#include <factline/finposet.hpp>

#include <random>

#include "oracles.hpp"

using namespace factline;

namespace {

FinPoset chain(int n) {
  std::vector<std::pair<int, int>> rel;
  for (int i = 0; i + 1 < n; ++i) rel.emplace_back(i, i + 1);
  return FinPoset(n, rel);
}

// Diagrams whose transports factor through a chain in a fixed linear order are
// automatically path-coherent; forests have no squares at all. Both families are
// used for randomized coverage.
SetDiagram random_chain_factored_diagram(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(1, 5), fd(1, 4), coin(0, 1);
  const int n = nd(rng);
  std::vector<std::pair<int, int>> rel;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng)) rel.emplace_back(i, j);
  FinPoset base(n, rel);
  std::vector<int> fibers(n);
  for (auto& f : fibers) f = fd(rng);
  // chain maps t_i : fiber(i) -> fiber(i+1) in index order
  std::vector<std::vector<int>> step(n > 0 ? n - 1 : 0);
  for (int i = 0; i + 1 < n; ++i) {
    step[i].resize(fibers[i]);
    std::uniform_int_distribution<int> pick(0, fibers[i + 1] - 1);
    for (auto& v : step[i]) v = pick(rng);
  }
  std::map<std::pair<int, int>, std::vector<int>> transport;
  for (const auto& pq : base.hasse()) {
    std::vector<int> comp(fibers[pq.first]);
    for (int x = 0; x < fibers[pq.first]; ++x) {
      int v = x;
      for (int i = pq.first; i < pq.second; ++i) v = step[i][v];
      comp[x] = v;
    }
    transport[pq] = comp;
  }
  return SetDiagram(std::move(base), std::move(fibers), std::move(transport));
}

SetDiagram random_forest_diagram(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nd(1, 5), fd(1, 4);
  const int n = nd(rng);
  std::vector<std::pair<int, int>> rel;
  for (int j = 1; j < n; ++j) {
    std::uniform_int_distribution<int> parent(-1, j - 1);
    const int p = parent(rng);
    if (p >= 0) rel.emplace_back(p, j);  // arrows point from parents up to children
  }
  FinPoset base(n, rel);
  std::vector<int> fibers(n);
  for (auto& f : fibers) f = fd(rng);
  std::map<std::pair<int, int>, std::vector<int>> transport;
  for (const auto& pq : base.hasse()) {
    std::vector<int> t(fibers[pq.first]);
    std::uniform_int_distribution<int> pick(0, fibers[pq.second] - 1);
    for (auto& v : t) v = pick(rng);
    transport[pq] = t;
  }
  return SetDiagram(std::move(base), std::move(fibers), std::move(transport));
}

}  // namespace

TEST_CASE("set_colimit on a point") {
  SetDiagram d(FinPoset(1, {}), {2}, {});
  const auto c = set_colimit(d);
  CHECK(c.size == 2);
  CHECK(c.cocone[0] == std::vector<int>{0, 1});
}

TEST_CASE("set_colimit of a span of points is a point") {
  // b <- a -> c with singleton fibers
  FinPoset base(3, {{0, 1}, {0, 2}});
  std::map<std::pair<int, int>, std::vector<int>> t;
  for (const auto& pq : base.hasse()) t[pq] = {0};
  const auto c = set_colimit(SetDiagram(base, {1, 1, 1}, t));
  CHECK(c.size == 1);
}

TEST_CASE("set_colimit of an injective chain matches the sweep oracle") {
  FinPoset base = chain(3);
  std::map<std::pair<int, int>, std::vector<int>> t;
  t[{0, 1}] = {0, 2};
  t[{1, 2}] = {1, 0, 2};
  SetDiagram d(base, {2, 3, 3}, t);
  const auto c = set_colimit(d);
  CHECK(c.size == 3);
  CHECK(c.cocone == oracles::set_colimit_classes(d));
}

TEST_CASE("set_colimit agrees with the sweep oracle on random diagrams") {
  std::mt19937_64 rng(20240816);
  for (int trial = 0; trial < 1200; ++trial) {
    const SetDiagram d =
        (trial % 2 == 0) ? random_chain_factored_diagram(rng) : random_forest_diagram(rng);
    const auto c = set_colimit(d);
    const auto expect = oracles::set_colimit_classes(d);
    REQUIRE(c.cocone == expect);
  }
}

TEST_CASE("set_colimit over a poset with terminal element is the terminal fiber") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    SetDiagram d = random_chain_factored_diagram(rng);
    const int n = d.base.size();
    int top = -1;
    for (int t = 0; t < n && top < 0; ++t) {
      bool is_top = true;
      for (int a = 0; a < n && is_top; ++a)
        if (!d.base.leq(a, t)) is_top = false;
      if (is_top) top = t;
    }
    if (top < 0) continue;
    const auto c = set_colimit(d);
    CHECK(c.size == d.fiber_size[top]);
    std::set<int> img(c.cocone[top].begin(), c.cocone[top].end());
    CHECK(static_cast<int>(img.size()) == d.fiber_size[top]);
  }
}

TEST_CASE("poset predicates") {
  CHECK(chain(3).directed());
  CHECK(chain(3).codirected());
  CHECK(chain(3).has_terminal());
  CHECK(chain(3).has_initial());

  FinPoset discrete(2, {});
  CHECK_FALSE(discrete.directed());
  CHECK_FALSE(discrete.codirected());
  CHECK_FALSE(discrete.has_terminal());
  CHECK_FALSE(discrete.has_initial());
}

TEST_CASE("partition refinements of a fixed partition are codirected under coarsening") {
  // Elements: all partitions of {0,1,2} (they all refine the one-block partition),
  // ordered finer <= coarser. Codirected because common refinements exist.
  const auto parts = oracles::set_partitions(3);
  const auto refines = [](const std::vector<std::vector<int>>& a,
                          const std::vector<std::vector<int>>& b) {
    // every block of a is inside some block of b
    for (const auto& ba : a) {
      bool inside = false;
      for (const auto& bb : b) {
        bool all = true;
        for (const int x : ba)
          if (std::find(bb.begin(), bb.end(), x) == bb.end()) all = false;
        if (all) inside = true;
      }
      if (!inside) return false;
    }
    return true;
  };
  std::vector<std::pair<int, int>> rel;
  const int n = static_cast<int>(parts.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && refines(parts[i], parts[j])) rel.emplace_back(i, j);
  FinPoset p(n, rel);
  CHECK(p.codirected());
  // brute force: every pair has a lower bound
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      bool found = false;
      for (int c = 0; c < n; ++c)
        if (p.leq(c, a) && p.leq(c, b)) found = true;
      CHECK(found);
    }
}

TEST_CASE("is_final_inclusion examples") {
  FinPoset with_top(3, {{0, 2}, {1, 2}});
  CHECK(with_top.is_final_inclusion({2}));

  // two incomparable maximal elements over a common bottom, no join
  FinPoset vee(3, {{0, 1}, {0, 2}});
  CHECK_FALSE(vee.is_final_inclusion({1, 2}));

  // punctured square {u1, u2, u12} inside a larger sieve of a 2-element cover:
  // extra elements w <= u12 and v <= u1 stand for smaller opens
  // ids: 0=u12, 1=u1, 2=u2, 3=w, 4=v
  FinPoset sieve(5, {{0, 1}, {0, 2}, {3, 0}, {4, 1}});
  CHECK(sieve.is_final_inclusion({0, 1, 2}));
  CHECK_FALSE(sieve.is_final_inclusion({1, 2}));  // slice at w is {u1,u2}, disconnected
}

TEST_CASE("final inclusion implies equal set colimits") {
  std::mt19937_64 rng(99);
  int tested = 0;
  for (int trial = 0; trial < 400 && tested < 120; ++trial) {
    SetDiagram d = random_chain_factored_diagram(rng);
    const int n = d.base.size();
    if (n < 2) continue;
    // try a few random subsets, keep final ones
    std::uniform_int_distribution<int> coin(0, 1);
    std::vector<int> s;
    for (int i = 0; i < n; ++i)
      if (coin(rng)) s.push_back(i);
    if (s.empty() || !d.base.is_final_inclusion(s)) continue;
    ++tested;

    // restricted diagram on s with composite transports
    std::vector<std::pair<int, int>> rel;
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = 0; j < s.size(); ++j)
        if (i != j && d.base.leq(s[i], s[j])) rel.emplace_back(static_cast<int>(i), static_cast<int>(j));
    FinPoset sub(static_cast<int>(s.size()), rel);
    std::vector<int> fibers;
    for (const int p : s) fibers.push_back(d.fiber_size[p]);
    std::map<std::pair<int, int>, std::vector<int>> t;
    for (const auto& pq : sub.hasse()) t[pq] = d.composite(s[pq.first], s[pq.second]);
    const auto restricted = set_colimit(SetDiagram(sub, fibers, t));
    const auto full = set_colimit(d);
    REQUIRE(restricted.size == full.size);

    // induced map restricted -> full is a bijection compatible with cocones
    std::vector<int> induced(restricted.size, -1);
    for (std::size_t i = 0; i < s.size(); ++i)
      for (int x = 0; x < d.fiber_size[s[i]]; ++x) {
        const int rc = restricted.cocone[i][x];
        const int fc = full.cocone[s[i]][x];
        if (induced[rc] < 0)
          induced[rc] = fc;
        else
          REQUIRE(induced[rc] == fc);
      }
    std::set<int> img(induced.begin(), induced.end());
    REQUIRE(static_cast<int>(img.size()) == full.size);
  }
  CHECK(tested >= 50);
}

TEST_CASE("SetDiagram rejects incoherent squares") {
  // square 0 < 1,2 < 3 with clashing composites
  FinPoset square(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  std::map<std::pair<int, int>, std::vector<int>> t;
  t[{0, 1}] = {0};
  t[{0, 2}] = {0};
  t[{1, 3}] = {0};
  t[{2, 3}] = {1};
  CHECK_THROWS_AS(SetDiagram(square, {1, 1, 1, 2}, t), IncoherentDiagram);
}

TEST_CASE("pi0_delta") {
  CompactSet k({{Rat(0), Rat(1)}});
  CHECK(pi0_delta(k, std::nullopt).count == 1);

  CompactSet k2({{Rat(0), Rat(1)}, {Rat(2), Rat(3)}});
  CompactSet big({{Rat(0), Rat(3)}});
  const auto merged = pi0_delta(k2, big);
  CHECK(merged.map == std::vector<int>{0, 0});
  CHECK_FALSE(merged.is_pi0_equivalence);

  CompactSet two({{Rat(-1), Rat(3, 2)}, {Rat(9, 5), Rat(4)}});
  const auto bij = pi0_delta(k2, two);
  CHECK(bij.map == std::vector<int>{0, 1});
  CHECK(bij.is_pi0_equivalence);

  CompactSet off({{Rat(5), Rat(6)}});
  CHECK_THROWS_AS(pi0_delta(k2, off), NotContained);
}

TEST_CASE("pi0_delta functoriality") {
  CompactSet a({{Rat(0), Rat(0)}, {Rat(1), Rat(1)}, {Rat(2), Rat(2)}});
  CompactSet b({{Rat(0), Rat(1)}, {Rat(2), Rat(2)}});
  CompactSet c({{Rat(0), Rat(2)}});
  const auto ab = pi0_delta(a, b);
  const auto bc = pi0_delta(b, c);
  const auto ac = pi0_delta(a, c);
  for (int i = 0; i < 3; ++i) CHECK(ac.map[i] == bc.map[ab.map[i]]);
}

TEST_CASE("weiss_localization_probe") {
  const std::vector<Rat> s{Rat(0), Rat(1), Rat(2)};
  CompactSet k1({{Rat(1, 4), Rat(1, 2)}, {Rat(5, 4), Rat(3, 2)}});
  CHECK(weiss_localization_probe(s, {k1}));

  CompactSet nested({{Rat(1, 3), Rat(2, 5)}, {Rat(13, 10), Rat(7, 5)}});
  CHECK(weiss_localization_probe(s, {k1, nested}));

  CompactSet k2({{Rat(2, 5), Rat(3, 5)}, {Rat(11, 10), Rat(13, 10)}});
  CHECK(weiss_localization_probe(s, {k1, k2}));

  // a sample whose gap structure misses the configuration
  CompactSet bad({{Rat(-2), Rat(-1)}, {Rat(1, 4), Rat(1, 2)}});
  CHECK_THROWS_AS(weiss_localization_probe(s, {bad}), BadConfiguration);
}
