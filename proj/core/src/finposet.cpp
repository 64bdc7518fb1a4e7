#include <factline/finposet.hpp>

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>

namespace factline {

FinPoset::FinPoset(int n, const std::vector<std::pair<int, int>>& relations) : n_(n) {
  if (n < 0) throw PosetError("negative element count");
  leq_.assign(static_cast<std::size_t>(n) * n, 0);
  const auto idx = [n](int a, int b) { return static_cast<std::size_t>(a) * n + b; };
  for (int i = 0; i < n; ++i) leq_[idx(i, i)] = 1;
  for (const auto& [a, b] : relations) {
    if (a < 0 || a >= n || b < 0 || b >= n) throw PosetError("relation index out of range");
    leq_[idx(a, b)] = 1;
  }
  // transitive closure
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      if (!leq_[idx(i, k)]) continue;
      for (int j = 0; j < n; ++j)
        if (leq_[idx(k, j)]) leq_[idx(i, j)] = 1;
    }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (leq_[idx(i, j)] && leq_[idx(j, i)]) throw PosetError("antisymmetry violated");
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      if (p == q || !leq_[idx(p, q)]) continue;
      bool covering = true;
      for (int r = 0; r < n && covering; ++r)
        if (r != p && r != q && leq_[idx(p, r)] && leq_[idx(r, q)]) covering = false;
      if (covering) hasse_.emplace_back(p, q);
    }
}

bool FinPoset::directed() const {
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b) {
      bool found = false;
      for (int c = 0; c < n_ && !found; ++c)
        if (leq(a, c) && leq(b, c)) found = true;
      if (!found) return false;
    }
  return true;
}

bool FinPoset::codirected() const {
  for (int a = 0; a < n_; ++a)
    for (int b = 0; b < n_; ++b) {
      bool found = false;
      for (int c = 0; c < n_ && !found; ++c)
        if (leq(c, a) && leq(c, b)) found = true;
      if (!found) return false;
    }
  return true;
}

bool FinPoset::has_terminal() const {
  for (int t = 0; t < n_; ++t) {
    bool top = true;
    for (int a = 0; a < n_ && top; ++a)
      if (!leq(a, t)) top = false;
    if (top) return true;
  }
  return false;
}

bool FinPoset::has_initial() const {
  for (int t = 0; t < n_; ++t) {
    bool bottom = true;
    for (int a = 0; a < n_ && bottom; ++a)
      if (!leq(t, a)) bottom = false;
    if (bottom) return true;
  }
  return false;
}

bool FinPoset::is_final_inclusion(const std::vector<int>& s) const {
  for (const int x : s)
    if (x < 0 || x >= n_) throw PosetError("subset index out of range");
  for (int q = 0; q < n_; ++q) {
    std::vector<int> slice;
    for (const int x : s)
      if (leq(q, x)) slice.push_back(x);
    if (slice.empty()) return false;
    // connectivity under comparability
    std::vector<char> seen(slice.size(), 0);
    std::queue<std::size_t> bfs;
    bfs.push(0);
    seen[0] = 1;
    while (!bfs.empty()) {
      const std::size_t i = bfs.front();
      bfs.pop();
      for (std::size_t j = 0; j < slice.size(); ++j) {
        if (seen[j]) continue;
        if (leq(slice[i], slice[j]) || leq(slice[j], slice[i])) {
          seen[j] = 1;
          bfs.push(j);
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) return false;
  }
  return true;
}

SetDiagram::SetDiagram(FinPoset base_, std::vector<int> fiber_size_,
                       std::map<std::pair<int, int>, std::vector<int>> transport_)
    : base(std::move(base_)), fiber_size(std::move(fiber_size_)), transport(std::move(transport_)) {
  if (static_cast<int>(fiber_size.size()) != base.size())
    throw IncoherentDiagram("fiber count does not match poset size");
  std::set<std::pair<int, int>> hasse_set(base.hasse().begin(), base.hasse().end());
  for (const auto& [pq, t] : transport) {
    if (!hasse_set.count(pq)) throw IncoherentDiagram("transport on a non-covering pair");
    if (static_cast<int>(t.size()) != fiber_size[pq.first])
      throw IncoherentDiagram("transport domain size mismatch");
    for (const int y : t)
      if (y < 0 || y >= fiber_size[pq.second]) throw IncoherentDiagram("transport image out of range");
  }
  for (const auto& pq : hasse_set)
    if (!transport.count(pq)) throw IncoherentDiagram("missing transport on a covering pair");

  // Path coherence: all Hasse-path composites between the same endpoints agree.
  const int n = base.size();
  for (int p = 0; p < n; ++p) {
    std::map<int, std::vector<int>> reached;  // q -> composite map fiber(p) -> fiber(q)
    std::vector<int> id(fiber_size[p]);
    std::iota(id.begin(), id.end(), 0);
    reached[p] = id;
    // repeatedly extend along covers; conflicts mean incoherent squares
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& [pq, t] : transport) {
        const auto it = reached.find(pq.first);
        if (it == reached.end()) continue;
        std::vector<int> comp(fiber_size[p]);
        for (int x = 0; x < fiber_size[p]; ++x) comp[x] = t[it->second[x]];
        const auto prev = reached.find(pq.second);
        if (prev == reached.end()) {
          reached[pq.second] = comp;
          grew = true;
        } else if (prev->second != comp) {
          throw IncoherentDiagram("transports disagree along two paths");
        }
      }
    }
  }
}

std::vector<int> SetDiagram::composite(int p, int q) const {
  if (!base.leq(p, q)) throw PosetError("composite requested on incomparable pair");
  std::map<int, std::vector<int>> reached;
  std::vector<int> id(fiber_size[p]);
  std::iota(id.begin(), id.end(), 0);
  reached[p] = id;
  bool grew = true;
  while (grew && !reached.count(q)) {
    grew = false;
    for (const auto& [pr, t] : transport) {
      const auto it = reached.find(pr.first);
      if (it == reached.end() || reached.count(pr.second)) continue;
      std::vector<int> comp(fiber_size[p]);
      for (int x = 0; x < fiber_size[p]; ++x) comp[x] = t[it->second[x]];
      reached[pr.second] = std::move(comp);
      grew = true;
    }
  }
  const auto it = reached.find(q);
  if (it == reached.end()) throw PosetError("no Hasse path between comparable elements");
  return it->second;
}

namespace {
struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};
}  // namespace

SetColimit set_colimit(const SetDiagram& d) {
  const int n = d.base.size();
  std::vector<int> offset(n + 1, 0);
  for (int p = 0; p < n; ++p) offset[p + 1] = offset[p] + d.fiber_size[p];
  UnionFind uf(offset[n]);
  for (const auto& [pq, t] : d.transport)
    for (int x = 0; x < d.fiber_size[pq.first]; ++x)
      uf.unite(offset[pq.first] + x, offset[pq.second] + t[x]);
  std::map<int, int> renumber;
  SetColimit out;
  out.cocone.resize(n);
  for (int p = 0; p < n; ++p) {
    out.cocone[p].resize(d.fiber_size[p]);
    for (int x = 0; x < d.fiber_size[p]; ++x) {
      const int root = uf.find(offset[p] + x);
      auto [it, inserted] = renumber.try_emplace(root, static_cast<int>(renumber.size()));
      out.cocone[p][x] = it->second;
    }
  }
  out.size = static_cast<int>(renumber.size());
  return out;
}

CompactSet::CompactSet(std::vector<ClosedInterval> components) : comps_(std::move(components)) {
  if (comps_.empty()) throw BadConfiguration("compact set must be nonempty");
  for (const auto& c : comps_)
    if (c.lo > c.hi) throw BadConfiguration("closed interval with lo > hi");
  for (std::size_t i = 0; i + 1 < comps_.size(); ++i)
    if (!(comps_[i].hi < comps_[i + 1].lo))
      throw BadConfiguration("compact components must be sorted and disjoint");
}

Pi0Delta pi0_delta(const CompactSet& k, const std::optional<CompactSet>& k2) {
  Pi0Delta out;
  out.count = k.component_count();
  if (!k2) return out;
  for (const auto& c : k.components()) {
    int target = -1;
    for (int j = 0; j < k2->component_count(); ++j) {
      const auto& d = k2->components()[j];
      if (d.lo <= c.lo && c.hi <= d.hi) {
        target = j;
        break;
      }
    }
    if (target < 0) throw NotContained("component of k not contained in any component of k2");
    out.map.push_back(target);
  }
  std::set<int> image(out.map.begin(), out.map.end());
  out.is_pi0_equivalence = static_cast<int>(image.size()) == k2->component_count() &&
                           static_cast<int>(out.map.size()) == static_cast<int>(image.size());
  return out;
}

namespace {
// true iff s has exactly one point in each open gap of the complement of k and no
// point touching k.
bool one_point_per_gap(const std::vector<Rat>& s, const CompactSet& k) {
  const auto& c = k.components();
  const int gaps = static_cast<int>(c.size()) + 1;
  std::vector<int> hits(gaps, 0);
  for (const auto& p : s) {
    int g = -1;
    if (p < c.front().lo) {
      g = 0;
    } else if (p > c.back().hi) {
      g = gaps - 1;
    } else {
      for (std::size_t i = 0; i + 1 < c.size(); ++i)
        if (p > c[i].hi && p < c[i + 1].lo) {
          g = static_cast<int>(i) + 1;
          break;
        }
    }
    if (g < 0) return false;  // point inside or touching some component
    ++hits[g];
  }
  return std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
}
}  // namespace

bool weiss_localization_probe(const std::vector<Rat>& s, const std::vector<CompactSet>& samples) {
  if (samples.empty()) return true;
  const int comps = samples.front().component_count();
  for (const auto& k : samples) {
    if (k.component_count() != comps)
      throw BadConfiguration("samples with differing component counts");
    if (static_cast<int>(s.size()) != comps + 1)
      throw BadConfiguration("point configuration size must be component count + 1");
    if (!one_point_per_gap(s, k)) throw BadConfiguration("configuration not one point per gap");
  }
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      const auto& a = samples[i].components();
      const auto& b = samples[j].components();
      std::vector<ClosedInterval> hull(comps);
      for (int c = 0; c < comps; ++c)
        hull[c] = {std::min(a[c].lo, b[c].lo), std::max(a[c].hi, b[c].hi)};
      bool ok = true;
      for (int c = 0; c + 1 < comps && ok; ++c)
        if (!(hull[c].hi < hull[c + 1].lo)) ok = false;
      if (!ok) return false;
      if (!one_point_per_gap(s, CompactSet(hull))) return false;
    }
  return true;
}

}  // namespace factline
