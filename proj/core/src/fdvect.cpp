#include <factline/fdvect.hpp>

#include <algorithm>
#include <numeric>
#include <set>

namespace factline {

VectObj VectObj::with_dim(int d, const std::string& stem) {
  VectObj v;
  v.dim = d;
  v.basis_labels.reserve(d);
  for (int i = 0; i < d; ++i) v.basis_labels.push_back(stem + std::to_string(i));
  return v;
}

VectObj VectObj::unit() {
  VectObj v;
  v.dim = 1;
  v.basis_labels = {"1"};
  return v;
}

// Labels are carried for report readability; equality of objects and maps is
// dimensionwise and entrywise. Different construction routes may relabel.
bool operator==(const VectObj& a, const VectObj& b) { return a.dim == b.dim; }

LinMap::LinMap(VectObj src_, VectObj dst_, Matrix m) : src(std::move(src_)), dst(std::move(dst_)), matrix(std::move(m)) {
  if (static_cast<int>(matrix.size()) != dst.dim) throw ShapeMismatch("matrix row count != dst dim");
  for (const auto& row : matrix)
    if (static_cast<int>(row.size()) != src.dim) throw ShapeMismatch("matrix column count != src dim");
}

LinMap LinMap::identity(const VectObj& v) {
  Matrix m(v.dim, std::vector<Rat>(v.dim, Rat(0)));
  for (int i = 0; i < v.dim; ++i) m[i][i] = Rat(1);
  return LinMap(v, v, std::move(m));
}

LinMap LinMap::identity_reshaped(const VectObj& src, const VectObj& dst) {
  if (src.dim != dst.dim) throw ShapeMismatch("identity_reshaped: dimensions differ");
  Matrix m(dst.dim, std::vector<Rat>(src.dim, Rat(0)));
  for (int i = 0; i < src.dim; ++i) m[i][i] = Rat(1);
  return LinMap(src, dst, std::move(m));
}

LinMap LinMap::zero(const VectObj& src, const VectObj& dst) {
  return LinMap(src, dst, Matrix(dst.dim, std::vector<Rat>(src.dim, Rat(0))));
}

LinMap LinMap::basis_permutation(const VectObj& src, const VectObj& dst, const std::vector<int>& perm) {
  if (src.dim != dst.dim || static_cast<int>(perm.size()) != src.dim)
    throw ShapeMismatch("permutation size mismatch");
  Matrix m(dst.dim, std::vector<Rat>(src.dim, Rat(0)));
  for (int i = 0; i < src.dim; ++i) m[perm[i]][i] = Rat(1);
  return LinMap(src, dst, std::move(m));
}

bool operator==(const LinMap& a, const LinMap& b) {
  return a.src.dim == b.src.dim && a.dst.dim == b.dst.dim && a.matrix == b.matrix;
}

LinMap compose(const LinMap& g, const LinMap& f) {
  if (f.dst.dim != g.src.dim) throw ShapeMismatch("compose: inner dimensions differ");
  Matrix m(g.dst.dim, std::vector<Rat>(f.src.dim, Rat(0)));
  for (int i = 0; i < g.dst.dim; ++i)
    for (int k = 0; k < g.src.dim; ++k) {
      if (g.matrix[i][k] == 0) continue;
      for (int j = 0; j < f.src.dim; ++j) m[i][j] += g.matrix[i][k] * f.matrix[k][j];
    }
  return LinMap(f.src, g.dst, std::move(m));
}

LinMap add(const LinMap& a, const LinMap& b) {
  if (a.src.dim != b.src.dim || a.dst.dim != b.dst.dim) throw ShapeMismatch("add: shape mismatch");
  Matrix m = a.matrix;
  for (int i = 0; i < a.dst.dim; ++i)
    for (int j = 0; j < a.src.dim; ++j) m[i][j] += b.matrix[i][j];
  return LinMap(a.src, a.dst, std::move(m));
}

LinMap subtract(const LinMap& a, const LinMap& b) {
  if (a.src.dim != b.src.dim || a.dst.dim != b.dst.dim) throw ShapeMismatch("subtract: shape mismatch");
  Matrix m = a.matrix;
  for (int i = 0; i < a.dst.dim; ++i)
    for (int j = 0; j < a.src.dim; ++j) m[i][j] -= b.matrix[i][j];
  return LinMap(a.src, a.dst, std::move(m));
}

VectObj tensor(const VectObj& a, const VectObj& b) {
  VectObj v;
  v.dim = a.dim * b.dim;
  v.basis_labels.reserve(v.dim);
  for (int i = 0; i < a.dim; ++i)
    for (int j = 0; j < b.dim; ++j) v.basis_labels.push_back(a.basis_labels[i] + "*" + b.basis_labels[j]);
  return v;
}

LinMap tensor(const LinMap& a, const LinMap& b) {
  const VectObj src = tensor(a.src, b.src);
  const VectObj dst = tensor(a.dst, b.dst);
  Matrix m(dst.dim, std::vector<Rat>(src.dim, Rat(0)));
  for (int i = 0; i < a.dst.dim; ++i)
    for (int j = 0; j < a.src.dim; ++j) {
      if (a.matrix[i][j] == 0) continue;
      for (int k = 0; k < b.dst.dim; ++k)
        for (int l = 0; l < b.src.dim; ++l)
          m[i * b.dst.dim + k][j * b.src.dim + l] = a.matrix[i][j] * b.matrix[k][l];
    }
  return LinMap(src, dst, std::move(m));
}

VectObj direct_sum(const VectObj& a, const VectObj& b) {
  VectObj v;
  v.dim = a.dim + b.dim;
  for (int i = 0; i < a.dim; ++i) v.basis_labels.push_back("l." + a.basis_labels[i]);
  for (int i = 0; i < b.dim; ++i) v.basis_labels.push_back("r." + b.basis_labels[i]);
  return v;
}

LinMap direct_sum(const LinMap& a, const LinMap& b) {
  const VectObj src = direct_sum(a.src, b.src);
  const VectObj dst = direct_sum(a.dst, b.dst);
  Matrix m(dst.dim, std::vector<Rat>(src.dim, Rat(0)));
  for (int i = 0; i < a.dst.dim; ++i)
    for (int j = 0; j < a.src.dim; ++j) m[i][j] = a.matrix[i][j];
  for (int i = 0; i < b.dst.dim; ++i)
    for (int j = 0; j < b.src.dim; ++j) m[a.dst.dim + i][a.src.dim + j] = b.matrix[i][j];
  return LinMap(src, dst, std::move(m));
}

LinMap tensor_swap(const VectObj& a, const VectObj& b) {
  std::vector<int> perm(static_cast<std::size_t>(a.dim) * b.dim);
  for (int i = 0; i < a.dim; ++i)
    for (int j = 0; j < b.dim; ++j) perm[i * b.dim + j] = j * a.dim + i;
  return LinMap::basis_permutation(tensor(a, b), tensor(b, a), perm);
}

namespace {
// Reduced row echelon form in place; returns pivot columns.
std::vector<int> rref(Matrix& a) {
  std::vector<int> pivots;
  if (a.empty()) return pivots;
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
    const Rat inv = Rat(1) / a[r][c];
    for (int j = c; j < cols; ++j) a[r][j] *= inv;
    for (int i = 0; i < rows; ++i) {
      if (i == r || a[i][c] == 0) continue;
      const Rat f = a[i][c];
      for (int j = c; j < cols; ++j) a[i][j] -= f * a[r][j];
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}
}  // namespace

int rank(const Matrix& m) {
  Matrix a = m;
  return static_cast<int>(rref(a).size());
}

bool is_iso(const LinMap& f) { return f.src.dim == f.dst.dim && rank(f.matrix) == f.src.dim; }

Cokernel cokernel(const LinMap& f) {
  const int m = f.dst.dim;
  // Row space of f^T = column space of f.
  Matrix t(f.src.dim, std::vector<Rat>(m, Rat(0)));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < f.src.dim; ++j) t[j][i] = f.matrix[i][j];
  const std::vector<int> pivots = rref(t);
  std::vector<char> is_pivot(m, 0);
  for (const int p : pivots) is_pivot[p] = 1;

  const int q = m - static_cast<int>(pivots.size());
  VectObj obj = VectObj::with_dim(q, "q");
  Matrix proj(q, std::vector<Rat>(m, Rat(0)));
  int row = 0;
  for (int j = 0; j < m; ++j) {
    if (is_pivot[j]) continue;
    // functional x_j - sum_i t[i][j]* x_{pivot_i} kills the column space
    proj[row][j] = Rat(1);
    for (std::size_t i = 0; i < pivots.size(); ++i) proj[row][pivots[i]] -= t[i][j];
    ++row;
  }
  LinMap projection(f.dst, obj, std::move(proj));
  return Cokernel{std::move(obj), std::move(projection)};
}

Cokernel reflexive_coequalizer(const LinMap& d0, const LinMap& d1) {
  if (d0.src.dim != d1.src.dim || d0.dst.dim != d1.dst.dim)
    throw ShapeMismatch("coequalizer pair must be parallel");
  return cokernel(subtract(d0, d1));
}

PosetColimit poset_colimit(const FinPoset& base, const std::vector<VectObj>& fibers,
                           const std::map<std::pair<int, int>, LinMap>& transports) {
  const int n = base.size();
  if (static_cast<int>(fibers.size()) != n) throw IncoherentDiagram("fiber count mismatch");
  std::set<std::pair<int, int>> hasse_set(base.hasse().begin(), base.hasse().end());
  for (const auto& [pq, t] : transports) {
    if (!hasse_set.count(pq)) throw IncoherentDiagram("transport on non-covering pair");
    if (t.src.dim != fibers[pq.first].dim || t.dst.dim != fibers[pq.second].dim)
      throw IncoherentDiagram("transport shape mismatch");
  }
  for (const auto& pq : hasse_set)
    if (!transports.count(pq)) throw IncoherentDiagram("missing transport on covering pair");

  // Linear path coherence, mirroring SetDiagram validation.
  for (int p = 0; p < n; ++p) {
    std::map<int, LinMap> reached;
    reached.emplace(p, LinMap::identity(fibers[p]));
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& [pq, t] : transports) {
        const auto it = reached.find(pq.first);
        if (it == reached.end()) continue;
        LinMap comp = compose(t, it->second);
        const auto prev = reached.find(pq.second);
        if (prev == reached.end()) {
          reached.emplace(pq.second, std::move(comp));
          grew = true;
        } else if (!(prev->second == comp)) {
          throw IncoherentDiagram("linear transports disagree along two paths");
        }
      }
    }
  }

  std::vector<int> offset(n + 1, 0);
  for (int p = 0; p < n; ++p) offset[p + 1] = offset[p] + fibers[p].dim;
  const int total = offset[n];
  int rel_cols = 0;
  for (const auto& [pq, t] : transports) rel_cols += t.src.dim;
  Matrix rel(total, std::vector<Rat>(rel_cols, Rat(0)));
  int col = 0;
  for (const auto& [pq, t] : transports) {
    for (int x = 0; x < t.src.dim; ++x) {
      rel[offset[pq.first] + x][col] -= 1;
      for (int y = 0; y < t.dst.dim; ++y) rel[offset[pq.second] + y][col] += t.matrix[y][x];
      ++col;
    }
  }
  VectObj sum = VectObj::with_dim(total, "s");
  const Cokernel ck = cokernel(LinMap(VectObj::with_dim(rel_cols, "r"), sum, std::move(rel)));

  PosetColimit out;
  out.obj = ck.obj;
  out.cocone.reserve(n);
  for (int p = 0; p < n; ++p) {
    Matrix m(ck.obj.dim, std::vector<Rat>(fibers[p].dim, Rat(0)));
    for (int i = 0; i < ck.obj.dim; ++i)
      for (int j = 0; j < fibers[p].dim; ++j) m[i][j] = ck.projection.matrix[i][offset[p] + j];
    out.cocone.emplace_back(fibers[p], ck.obj, std::move(m));
  }
  return out;
}

std::optional<Matrix> solve(const Matrix& p, const Matrix& f) {
  // Gaussian elimination on the augmented system p * x = f.
  const int rows = static_cast<int>(p.size());
  const int cols = rows > 0 ? static_cast<int>(p[0].size()) : 0;
  const int fcols = rows > 0 ? static_cast<int>(f[0].size()) : (f.empty() ? 0 : static_cast<int>(f[0].size()));
  Matrix a(rows, std::vector<Rat>(cols + fcols, Rat(0)));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) a[i][j] = p[i][j];
    for (int j = 0; j < fcols; ++j) a[i][cols + j] = f[i][j];
  }
  std::vector<int> pivot_col;
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int piv = -1;
    for (int i = r; i < rows; ++i)
      if (a[i][c] != 0) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    std::swap(a[r], a[piv]);
    const Rat inv = Rat(1) / a[r][c];
    for (int j = c; j < cols + fcols; ++j) a[r][j] *= inv;
    for (int i = 0; i < rows; ++i) {
      if (i == r || a[i][c] == 0) continue;
      const Rat fac = a[i][c];
      for (int j = c; j < cols + fcols; ++j) a[i][j] -= fac * a[r][j];
    }
    pivot_col.push_back(c);
    ++r;
  }
  for (int i = r; i < rows; ++i)
    for (int j = 0; j < fcols; ++j)
      if (a[i][cols + j] != 0) return std::nullopt;
  Matrix x(cols, std::vector<Rat>(fcols, Rat(0)));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < fcols; ++j) x[pivot_col[i]][j] = a[i][cols + j];
  return x;
}

std::optional<LinMap> factor_through_surjection(const LinMap& p, const LinMap& f) {
  if (p.src.dim != f.src.dim) throw ShapeMismatch("factor: sources differ");
  if (p.src.dim == 0) return LinMap::zero(p.dst, f.dst);
  // h * p = f  <=>  p^T * h^T = f^T
  Matrix pt(p.src.dim, std::vector<Rat>(p.dst.dim, Rat(0)));
  for (int i = 0; i < p.dst.dim; ++i)
    for (int j = 0; j < p.src.dim; ++j) pt[j][i] = p.matrix[i][j];
  Matrix ft(f.src.dim, std::vector<Rat>(f.dst.dim, Rat(0)));
  for (int i = 0; i < f.dst.dim; ++i)
    for (int j = 0; j < f.src.dim; ++j) ft[j][i] = f.matrix[i][j];
  const auto ht = solve(pt, ft);
  if (!ht) return std::nullopt;
  Matrix h(f.dst.dim, std::vector<Rat>(p.dst.dim, Rat(0)));
  for (int i = 0; i < p.dst.dim; ++i)
    for (int j = 0; j < f.dst.dim; ++j) h[j][i] = (*ht)[i][j];
  LinMap out(p.dst, f.dst, std::move(h));
  if (!(compose(out, p) == f)) return std::nullopt;
  return out;
}

}  // namespace factline
