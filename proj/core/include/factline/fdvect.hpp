#pragma once

#include <factline/finposet.hpp>
#include <factline/rational.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace factline {

struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

// Finite-dimensional rational vector space with a named basis.
struct VectObj {
  int dim = 0;
  std::vector<std::string> basis_labels;  // pairwise distinct, length == dim

  static VectObj with_dim(int d, const std::string& stem = "e");
  static VectObj unit();  // the monoidal unit, dim 1, label "1"
};

bool operator==(const VectObj& a, const VectObj& b);

using Matrix = std::vector<std::vector<Rat>>;  // row major

struct LinMap {
  VectObj src;
  VectObj dst;
  Matrix matrix;  // dst.dim x src.dim

  LinMap() = default;
  LinMap(VectObj src_, VectObj dst_, Matrix m);

  static LinMap identity(const VectObj& v);
  // Identity matrix between distinct objects of equal dimension (unitors,
  // associators, relabelings). Throws ShapeMismatch if dims differ.
  static LinMap identity_reshaped(const VectObj& src, const VectObj& dst);
  static LinMap zero(const VectObj& src, const VectObj& dst);
  // Basis permutation: dst basis index perm[i] receives src basis index i.
  static LinMap basis_permutation(const VectObj& src, const VectObj& dst,
                                  const std::vector<int>& perm);

  Rat at(int row, int col) const { return matrix[row][col]; }
};

bool operator==(const LinMap& a, const LinMap& b);

LinMap compose(const LinMap& g, const LinMap& f);  // g after f
LinMap add(const LinMap& a, const LinMap& b);
LinMap subtract(const LinMap& a, const LinMap& b);

VectObj tensor(const VectObj& a, const VectObj& b);
LinMap tensor(const LinMap& a, const LinMap& b);

VectObj direct_sum(const VectObj& a, const VectObj& b);
LinMap direct_sum(const LinMap& a, const LinMap& b);

// The symmetry a (x) b -> b (x) a.
LinMap tensor_swap(const VectObj& a, const VectObj& b);

int rank(const Matrix& m);
bool is_iso(const LinMap& f);

struct Cokernel {
  VectObj obj;
  LinMap projection;  // dst(f) ->> obj
};

// Exact rational row reduction; projection surjective, projection . f = 0,
// dim = dst.dim - rank(f).
Cokernel cokernel(const LinMap& f);

// Cokernel of d0 - d1. Throws ShapeMismatch unless d0, d1 share src and dst.
Cokernel reflexive_coequalizer(const LinMap& d0, const LinMap& d1);

struct PosetColimit {
  VectObj obj;
  std::vector<LinMap> cocone;  // one per poset element
};

// coker( sum over Hasse pairs p<q of F(p) --incl_q . T - incl_p--> sum of F(p) ).
// Throws IncoherentDiagram if Hasse-path composites disagree.
PosetColimit poset_colimit(const FinPoset& base, const std::vector<VectObj>& fibers,
                           const std::map<std::pair<int, int>, LinMap>& transports);

// Unique h with h . p = f, for surjective p (exists iff ker p <= ker f; checked
// exactly, nullopt otherwise).
std::optional<LinMap> factor_through_surjection(const LinMap& p, const LinMap& f);

// Solve p . x = f columnwise (any solution); nullopt if inconsistent.
std::optional<Matrix> solve(const Matrix& p, const Matrix& f);

}  // namespace factline
