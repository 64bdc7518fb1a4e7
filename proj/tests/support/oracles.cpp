#include "oracles.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace factline::oracles {

std::vector<std::vector<int>> set_colimit_classes(const SetDiagram& d) {
  const int n = d.base.size();
  std::vector<int> offset(n + 1, 0);
  for (int p = 0; p < n; ++p) offset[p + 1] = offset[p] + d.fiber_size[p];
  const int total = offset[n];

  // Every point starts in its own class; sweep the full identification list until
  // nothing changes.
  std::vector<int> cls(total);
  std::iota(cls.begin(), cls.end(), 0);
  std::vector<std::pair<int, int>> pairs;
  for (const auto& [pq, t] : d.transport) {
    for (int x = 0; x < d.fiber_size[pq.first]; ++x)
      pairs.emplace_back(offset[pq.first] + x, offset[pq.second] + t[x]);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [a, b] : pairs) {
      const int m = std::min(cls[a], cls[b]);
      if (cls[a] != m || cls[b] != m) {
        const int ca = cls[a], cb = cls[b];
        for (int i = 0; i < total; ++i)
          if (cls[i] == ca || cls[i] == cb) cls[i] = m;
        changed = true;
      }
    }
  }
  std::map<int, int> renumber;
  for (int i = 0; i < total; ++i)
    if (!renumber.count(cls[i])) {
      const int next = static_cast<int>(renumber.size());
      renumber[cls[i]] = next;
    }
  std::vector<std::vector<int>> out(n);
  for (int p = 0; p < n; ++p) {
    out[p].resize(d.fiber_size[p]);
    for (int x = 0; x < d.fiber_size[p]; ++x) out[p][x] = renumber[cls[offset[p] + x]];
  }
  return out;
}

int rank_gauss(const Matrix& m) {
  if (m.empty()) return 0;
  Matrix a = m;
  const int rows = static_cast<int>(a.size());
  const int cols = static_cast<int>(a[0].size());
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int pivot = -1;
    for (int i = r; i < rows; ++i)
      if (a[i][c] != 0) {
        pivot = i;
        break;
      }
    if (pivot < 0) continue;
    std::swap(a[r], a[pivot]);
    for (int i = 0; i < rows; ++i) {
      if (i == r || a[i][c] == 0) continue;
      const Rat f = a[i][c] / a[r][c];
      for (int j = c; j < cols; ++j) a[i][j] -= f * a[r][j];
    }
    ++r;
  }
  return r;
}

Rat det_laplace(const Matrix& m) {
  const int n = static_cast<int>(m.size());
  if (n == 0) return Rat(1);
  if (n == 1) return m[0][0];
  Rat acc(0);
  for (int j = 0; j < n; ++j) {
    if (m[0][j] == 0) continue;
    Matrix minor(n - 1, std::vector<Rat>(n - 1));
    for (int r = 1; r < n; ++r) {
      int cc = 0;
      for (int c = 0; c < n; ++c) {
        if (c == j) continue;
        minor[r - 1][cc++] = m[r][c];
      }
    }
    const Rat term = m[0][j] * det_laplace(minor);
    acc += (j % 2 == 0) ? term : -term;
  }
  return acc;
}

Matrix kron(const Matrix& a, int a_rows, int a_cols, const Matrix& b, int b_rows, int b_cols) {
  Matrix out(static_cast<std::size_t>(a_rows) * b_rows,
             std::vector<Rat>(static_cast<std::size_t>(a_cols) * b_cols, Rat(0)));
  for (int i = 0; i < a_rows; ++i)
    for (int j = 0; j < a_cols; ++j)
      for (int k = 0; k < b_rows; ++k)
        for (int l = 0; l < b_cols; ++l)
          out[static_cast<std::size_t>(i) * b_rows + k][static_cast<std::size_t>(j) * b_cols + l] =
              a[i][j] * b[k][l];
  return out;
}

FullRelColimit poset_colimit_full_relations(
    const FinPoset& base, const std::vector<int>& fiber_dims,
    const std::map<std::pair<int, int>, Matrix>& hasse_transports) {
  const int n = base.size();
  std::vector<int> offset(n + 1, 0);
  for (int p = 0; p < n; ++p) offset[p + 1] = offset[p] + fiber_dims[p];
  const int total = offset[n];

  // Composite transport for every comparable pair, by path multiplication along a
  // breadth-first search in the Hasse graph.
  // cols passed explicitly: f may have zero rows, which loses the column count.
  const auto compose_mm = [](const Matrix& g, const Matrix& f, int cols) {
    const int rows = static_cast<int>(g.size());
    const int mid = static_cast<int>(f.size());
    Matrix out(rows, std::vector<Rat>(cols, Rat(0)));
    for (int i = 0; i < rows; ++i)
      for (int k = 0; k < mid; ++k) {
        if (g[i][k] == 0) continue;
        for (int j = 0; j < cols; ++j) out[i][j] += g[i][k] * f[k][j];
      }
    return out;
  };
  const auto ident = [](int d) {
    Matrix m(d, std::vector<Rat>(d, Rat(0)));
    for (int i = 0; i < d; ++i) m[i][i] = Rat(1);
    return m;
  };

  std::map<std::pair<int, int>, Matrix> full;
  for (int p = 0; p < n; ++p) {
    full[{p, p}] = ident(fiber_dims[p]);
    // breadth-first closure from p
    std::vector<int> frontier{p};
    while (!frontier.empty()) {
      std::vector<int> next;
      for (const int q : frontier) {
        for (const auto& [pq, t] : hasse_transports) {
          if (pq.first != q) continue;
          const int r = pq.second;
          if (full.count({p, r})) continue;
          full[{p, r}] = compose_mm(t, full[{p, q}], fiber_dims[p]);
          next.push_back(r);
        }
      }
      frontier = std::move(next);
    }
  }

  std::vector<std::vector<Rat>> cols;  // each entry a column of length total
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      if (p == q || !base.leq(p, q)) continue;
      const auto it = full.find({p, q});
      if (it == full.end()) throw std::logic_error("comparable pair unreachable in Hasse graph");
      const Matrix& t = it->second;
      for (int x = 0; x < fiber_dims[p]; ++x) {
        std::vector<Rat> col(total, Rat(0));
        col[offset[p] + x] -= 1;
        for (int y = 0; y < fiber_dims[q]; ++y) col[offset[q] + y] += t[y][x];
        cols.push_back(std::move(col));
      }
    }

  Matrix rel(total, std::vector<Rat>(cols.size(), Rat(0)));
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (int r = 0; r < total; ++r) rel[r][c] = cols[c][r];

  FullRelColimit out;
  out.relation_columns = rel;
  out.dim = total - rank_gauss(rel);
  return out;
}

int commutator_quotient_dim(const std::vector<std::vector<std::vector<Rat>>>& mult, int dim) {
  std::vector<std::vector<Rat>> span;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      std::vector<Rat> v(dim, Rat(0));
      for (int k = 0; k < dim; ++k) v[k] = mult[i][j][k] - mult[j][i][k];
      span.push_back(std::move(v));
    }
  Matrix m(dim, std::vector<Rat>(span.size(), Rat(0)));
  for (std::size_t c = 0; c < span.size(); ++c)
    for (int r = 0; r < dim; ++r) m[r][c] = span[c][r];
  return dim - rank_gauss(m);
}

int bar_quotient_dim(const std::vector<std::vector<std::vector<Rat>>>& right_act, int dim_m1,
                     const std::vector<std::vector<std::vector<Rat>>>& left_act, int dim_a,
                     int dim_m2) {
  const int total = dim_m1 * dim_m2;
  std::vector<std::vector<Rat>> span;
  for (int m = 0; m < dim_m1; ++m)
    for (int a = 0; a < dim_a; ++a)
      for (int mp = 0; mp < dim_m2; ++mp) {
        std::vector<Rat> v(total, Rat(0));
        for (int k = 0; k < dim_m1; ++k) v[k * dim_m2 + mp] += right_act[m][a][k];
        for (int k = 0; k < dim_m2; ++k) v[m * dim_m2 + k] -= left_act[a][mp][k];
        span.push_back(std::move(v));
      }
  Matrix mat(total, std::vector<Rat>(span.size(), Rat(0)));
  for (std::size_t c = 0; c < span.size(); ++c)
    for (int r = 0; r < total; ++r) mat[r][c] = span[c][r];
  return total - rank_gauss(mat);
}

std::vector<std::vector<std::vector<int>>> set_partitions(int n) {
  std::vector<std::vector<std::vector<int>>> out;
  if (n == 0) {
    out.push_back({});
    return out;
  }
  std::vector<int> rgs(n, 0);
  while (true) {
    int blocks = 1 + *std::max_element(rgs.begin(), rgs.end());
    std::vector<std::vector<int>> part(blocks);
    for (int i = 0; i < n; ++i) part[rgs[i]].push_back(i);
    out.push_back(part);
    // next restricted growth string
    int i = n - 1;
    while (i > 0) {
      int cap = 0;
      for (int j = 0; j < i; ++j) cap = std::max(cap, rgs[j]);
      if (rgs[i] <= cap) break;
      --i;
    }
    if (i == 0) break;
    ++rgs[i];
    for (int j = i + 1; j < n; ++j) rgs[j] = 0;
  }
  return out;
}

std::uint64_t bell_number(int n) {
  // Bell triangle.
  std::vector<std::vector<std::uint64_t>> tri{{1}};
  for (int i = 1; i <= n; ++i) {
    std::vector<std::uint64_t> row{tri.back().back()};
    for (std::size_t j = 0; j < tri.back().size(); ++j) row.push_back(row.back() + tri.back()[j]);
    tri.push_back(std::move(row));
  }
  return tri[n][0];
}

std::uint64_t count_rooted_trees(int n_vertices, int max_arity) {
  // t[v] = classes with v vertices; children form a multiset of smaller trees of
  // size k <= max_arity. Multisets counted by grouping identical classes: with
  // t[w] kinds of weight w and j copies chosen, multiplicity C(t[w] + j - 1, j).
  std::vector<std::uint64_t> t(n_vertices + 1, 0);
  t[0] = 1;  // bare edge
  const auto choose_multi = [](std::uint64_t kinds, int copies) {
    // C(kinds + copies - 1, copies)
    std::uint64_t num = 1, den = 1;
    for (int i = 0; i < copies; ++i) {
      num *= kinds + static_cast<std::uint64_t>(i);
      den *= static_cast<std::uint64_t>(i) + 1;
    }
    return num / den;
  };
  for (int v = 1; v <= n_vertices; ++v) {
    // ways[w][k] while scanning child weights 0..v-1: total child weight w using k
    // children so far.
    std::vector<std::vector<std::uint64_t>> ways(v, std::vector<std::uint64_t>(max_arity + 1, 0));
    ways[0][0] = 1;
    for (int w = 0; w <= v - 1; ++w) {
      if (t[w] == 0) continue;
      std::vector<std::vector<std::uint64_t>> next = ways;
      for (int used = 0; used <= v - 1; ++used)
        for (int k = 0; k <= max_arity; ++k) {
          if (ways[used][k] == 0) continue;
          for (int j = 1; k + j <= max_arity; ++j) {
            const int add = j * w;
            if (w == 0 && j > 0) {
              // weight-0 children: bare edges; allowed, add no weight
              next[used][k + j] += ways[used][k] * choose_multi(t[0], j);
              continue;
            }
            if (used + add > v - 1) break;
            next[used + add][k + j] += ways[used][k] * choose_multi(t[w], j);
          }
        }
      ways = std::move(next);
    }
    std::uint64_t total = 0;
    for (int k = 0; k <= max_arity; ++k) total += ways[v - 1][k];
    t[v] = total;
  }
  return t[n_vertices];
}

}  // namespace factline::oracles
