#pragma once

#include <cstddef>
#include <optional>
#include <utility>

#include "cracklat/core.hpp"

namespace cracklat {

inline Mat identity_matrix(std::size_t n) {
  Mat a(n, zero_vec(n));
  for (std::size_t i = 0; i < n; ++i) a[i][i] = 1;
  return a;
}

inline Mat transpose(const Mat& a) {
  if (a.empty()) return {};
  Mat r(a[0].size(), zero_vec(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) r[j][i] = a[i][j];
  return r;
}

inline QMat transpose(const QMat& a) {
  if (a.empty()) return {};
  QMat r(a[0].size(), zero_qvec(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) r[j][i] = a[i][j];
  return r;
}

inline Mat mat_mul(const Mat& a, const Mat& b) {
  if (a.empty() || b.empty()) return {};
  std::size_t m = a.size(), k = b.size(), n = b[0].size();
  Mat r(m, zero_vec(n));
  for (std::size_t i = 0; i < m; ++i) {
    if (a[i].size() != k) throw input_error("mat_mul: dimension mismatch");
    for (std::size_t t = 0; t < k; ++t) {
      if (a[i][t] == 0) continue;
      for (std::size_t j = 0; j < n; ++j) r[i][j] += a[i][t] * b[t][j];
    }
  }
  return r;
}

// A x with x a column vector.
inline Vec mat_vec(const Mat& a, const Vec& x) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = dot(a[i], x);
  return r;
}

inline QVec mat_vec(const Mat& a, const QVec& x) {
  QVec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = dot(a[i], x);
  return r;
}

inline Int content(const Vec& v) {
  Int g = 0;
  for (const Int& x : v) g = boost::multiprecision::gcd(g, x);
  return g;
}

inline Vec primitive_vector(const Vec& v) {
  Int g = content(v);
  if (g == 0) throw input_error("ZeroVector: primitive_vector of 0");
  Vec r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i] / g;
  return r;
}

// Primitive integer vector on the ray through a nonzero rational vector.
inline Vec primitive_vector(const QVec& v) {
  return primitive_vector(clear_denominators(v));
}

inline Int floor_div(const Int& a, const Int& b) {
  Int q = a / b, r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) --q;
  return q;
}

struct HnfResult {
  Mat H;
  Mat U;
  std::size_t rank = 0;
};

// Row-style Hermite normal form: H = U*A, U unimodular, H in echelon form
// with positive pivots and entries above each pivot reduced into [0, pivot).
inline HnfResult hermite_normal_form(const Mat& a) {
  std::size_t m = a.size(), n = m ? a[0].size() : 0;
  HnfResult res{a, identity_matrix(m), 0};
  Mat& h = res.H;
  Mat& u = res.U;
  std::size_t row = 0;
  for (std::size_t col = 0; col < n && row < m; ++col) {
    while (true) {
      std::size_t best = m;
      for (std::size_t i = row; i < m; ++i)
        if (h[i][col] != 0 &&
            (best == m || abs(h[i][col]) < abs(h[best][col])))
          best = i;
      if (best == m) break;
      std::swap(h[row], h[best]);
      std::swap(u[row], u[best]);
      bool cleared = true;
      for (std::size_t i = row + 1; i < m; ++i) {
        if (h[i][col] == 0) continue;
        Int q = floor_div(h[i][col], h[row][col]);
        if (q != 0) {
          for (std::size_t j = 0; j < n; ++j) h[i][j] -= q * h[row][j];
          for (std::size_t j = 0; j < m; ++j) u[i][j] -= q * u[row][j];
        }
        if (h[i][col] != 0) cleared = false;
      }
      if (cleared) break;
    }
    if (h[row][col] == 0) continue;
    if (h[row][col] < 0) {
      for (std::size_t j = 0; j < n; ++j) h[row][j] = -h[row][j];
      for (std::size_t j = 0; j < m; ++j) u[row][j] = -u[row][j];
    }
    for (std::size_t i = 0; i < row; ++i) {
      Int q = floor_div(h[i][col], h[row][col]);
      if (q != 0) {
        for (std::size_t j = 0; j < n; ++j) h[i][j] -= q * h[row][j];
        for (std::size_t j = 0; j < m; ++j) u[i][j] -= q * u[row][j];
      }
    }
    ++row;
  }
  res.rank = row;
  return res;
}

struct SnfResult {
  Mat D;
  Mat U;
  Mat V;
  std::vector<Int> divisors;  // nonzero diagonal entries, d1 | d2 | ...
};

// Smith normal form: D = U*A*V, U and V unimodular, D diagonal with
// d1 | d2 | ... and nonnegative entries.
inline SnfResult smith_normal_form(const Mat& a) {
  std::size_t m = a.size(), n = m ? a[0].size() : 0;
  SnfResult res{a, identity_matrix(m), identity_matrix(n), {}};
  Mat& d = res.D;
  Mat& u = res.U;
  Mat& v = res.V;

  auto swap_rows = [&](std::size_t i, std::size_t j) {
    std::swap(d[i], d[j]);
    std::swap(u[i], u[j]);
  };
  auto swap_cols = [&](std::size_t i, std::size_t j) {
    for (std::size_t r = 0; r < m; ++r) std::swap(d[r][i], d[r][j]);
    for (std::size_t r = 0; r < n; ++r) std::swap(v[r][i], v[r][j]);
  };
  auto row_op = [&](std::size_t i, std::size_t j, const Int& q) {
    // row i -= q * row j
    for (std::size_t c = 0; c < n; ++c) d[i][c] -= q * d[j][c];
    for (std::size_t c = 0; c < m; ++c) u[i][c] -= q * u[j][c];
  };
  auto col_op = [&](std::size_t i, std::size_t j, const Int& q) {
    // col i -= q * col j
    for (std::size_t r = 0; r < m; ++r) d[r][i] -= q * d[r][j];
    for (std::size_t r = 0; r < n; ++r) v[r][i] -= q * v[r][j];
  };

  std::size_t t = 0;
  while (t < m && t < n) {
    std::size_t pi = m, pj = n;
    for (std::size_t i = t; i < m; ++i)
      for (std::size_t j = t; j < n; ++j)
        if (d[i][j] != 0 && (pi == m || abs(d[i][j]) < abs(d[pi][pj]))) {
          pi = i;
          pj = j;
        }
    if (pi == m) break;
    if (pi != t) swap_rows(pi, t);
    if (pj != t) swap_cols(pj, t);
    bool clean = true;
    for (std::size_t i = t + 1; i < m; ++i) {
      if (d[i][t] == 0) continue;
      Int q = floor_div(d[i][t], d[t][t]);
      row_op(i, t, q);
      if (d[i][t] != 0) clean = false;
    }
    for (std::size_t j = t + 1; j < n; ++j) {
      if (d[t][j] == 0) continue;
      Int q = floor_div(d[t][j], d[t][t]);
      col_op(j, t, q);
      if (d[t][j] != 0) clean = false;
    }
    if (!clean) continue;
    // pivot divides every remaining entry, else pull the obstruction in
    bool divides = true;
    for (std::size_t i = t + 1; i < m && divides; ++i)
      for (std::size_t j = t + 1; j < n && divides; ++j)
        if (d[i][j] % d[t][t] != 0) {
          row_op(t, i, Int(-1));  // row t += row i
          divides = false;
        }
    if (!divides) continue;
    if (d[t][t] < 0) {
      for (std::size_t c = 0; c < n; ++c) d[t][c] = -d[t][c];
      for (std::size_t c = 0; c < m; ++c) u[t][c] = -u[t][c];
    }
    ++t;
  }
  for (std::size_t i = 0; i < t; ++i) res.divisors.push_back(d[i][i]);
  return res;
}

// Fraction-free determinant (Bareiss).
inline Int det(const Mat& a) {
  std::size_t n = a.size();
  for (const Vec& row : a)
    if (row.size() != n) throw input_error("det: matrix not square");
  if (n == 0) return 1;
  Mat b = a;
  Int denom = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (b[k][k] == 0) {
      std::size_t p = k + 1;
      while (p < n && b[p][k] == 0) ++p;
      if (p == n) return 0;
      std::swap(b[k], b[p]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j)
        b[i][j] = (b[i][j] * b[k][k] - b[i][k] * b[k][j]) / denom;
    denom = b[k][k];
  }
  return sign > 0 ? b[n - 1][n - 1] : -b[n - 1][n - 1];
}

inline std::size_t rank_of(const Mat& a) { return hermite_normal_form(a).rank; }

inline bool is_unimodular_matrix(const Mat& a) {
  if (a.empty()) return true;
  if (a.size() != a[0].size()) return false;
  Int d = det(a);
  return d == 1 || d == -1;
}

// Some integral solution x of A x = b, or nullopt when none exists.
inline std::optional<Vec> solve_integral(const Mat& a, const Vec& b) {
  std::size_t m = a.size(), n = m ? a[0].size() : 0;
  if (b.size() != m) throw input_error("solve_integral: dimension mismatch");
  if (m == 0) return zero_vec(n);
  SnfResult s = smith_normal_form(a);
  Vec ub = mat_vec(s.U, b);
  std::size_t r = s.divisors.size();
  Vec y = zero_vec(n);
  for (std::size_t i = 0; i < m; ++i) {
    if (i < r) {
      if (ub[i] % s.divisors[i] != 0) return std::nullopt;
      if (i < n) y[i] = ub[i] / s.divisors[i];
    } else if (ub[i] != 0) {
      return std::nullopt;
    }
  }
  return mat_vec(s.V, y);
}

// Some rational solution of A x = b (free variables set to 0), or nullopt.
inline std::optional<QVec> solve_rational(const QMat& a, const QVec& b) {
  std::size_t m = a.size(), n = m ? a[0].size() : 0;
  if (b.size() != m) throw input_error("solve_rational: dimension mismatch");
  QMat w = a;
  QVec rhs = b;
  std::vector<std::size_t> pivot_col;
  std::size_t row = 0;
  for (std::size_t col = 0; col < n && row < m; ++col) {
    std::size_t p = row;
    while (p < m && w[p][col] == 0) ++p;
    if (p == m) continue;
    std::swap(w[p], w[row]);
    std::swap(rhs[p], rhs[row]);
    Rat inv = Rat(1) / w[row][col];
    for (std::size_t j = col; j < n; ++j) w[row][j] *= inv;
    rhs[row] *= inv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == row || w[i][col] == 0) continue;
      Rat f = w[i][col];
      for (std::size_t j = col; j < n; ++j) w[i][j] -= f * w[row][j];
      rhs[i] -= f * rhs[row];
    }
    pivot_col.push_back(col);
    ++row;
  }
  for (std::size_t i = row; i < m; ++i)
    if (rhs[i] != 0) return std::nullopt;
  QVec x = zero_qvec(n);
  for (std::size_t i = 0; i < pivot_col.size(); ++i) x[pivot_col[i]] = rhs[i];
  return x;
}

inline std::optional<QVec> solve_rational(const Mat& a, const QVec& b) {
  return solve_rational(to_q(a), b);
}

inline std::optional<QMat> inverse_rational(const QMat& a) {
  std::size_t n = a.size();
  for (const QVec& row : a)
    if (row.size() != n) throw input_error("inverse: matrix not square");
  QMat w = a;
  QMat inv(n, zero_qvec(n));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t p = col;
    while (p < n && w[p][col] == 0) ++p;
    if (p == n) return std::nullopt;
    std::swap(w[p], w[col]);
    std::swap(inv[p], inv[col]);
    Rat f = Rat(1) / w[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      w[col][j] *= f;
      inv[col][j] *= f;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == col || w[i][col] == 0) continue;
      Rat g = w[i][col];
      for (std::size_t j = 0; j < n; ++j) {
        w[i][j] -= g * w[col][j];
        inv[i][j] -= g * inv[col][j];
      }
    }
  }
  return inv;
}

inline std::optional<QMat> inverse_rational(const Mat& a) {
  return inverse_rational(to_q(a));
}

// Exact integer inverse of a unimodular matrix.
inline Mat unimodular_inverse(const Mat& a) {
  auto inv = inverse_rational(a);
  if (!inv) throw input_error("unimodular_inverse: singular matrix");
  Mat r(inv->size());
  for (std::size_t i = 0; i < inv->size(); ++i) r[i] = to_int((*inv)[i]);
  return r;
}

// HNF-canonical basis of the lattice generated by the rows of A.
inline Mat hnf_basis(const Mat& a) {
  HnfResult h = hermite_normal_form(a);
  Mat basis(h.H.begin(), h.H.begin() + static_cast<std::ptrdiff_t>(h.rank));
  return basis;
}

// HNF-canonical basis of {x : A x = 0} over the integers (rows of the
// result).  The basis spans a saturated sublattice by construction.
inline Mat integer_kernel(const Mat& a) {
  if (a.empty()) return {};
  Mat at = transpose(a);
  HnfResult h = hermite_normal_form(at);
  Mat gens;
  for (std::size_t i = h.rank; i < h.U.size(); ++i) gens.push_back(h.U[i]);
  return hnf_basis(gens);
}

// HNF-canonical basis of the saturation of the row span of A.
inline Mat saturate_rows(const Mat& a) {
  if (a.empty()) return {};
  Mat k = integer_kernel(a);
  if (k.empty()) return identity_matrix(a[0].size());
  return integer_kernel(k);
}

// Extends the independent rows of B (spanning a saturated lattice) to a
// basis of Z^n.  Returns the full n x n unimodular matrix whose first
// B.size() rows are exactly B.
inline Mat completion_to_basis(const Mat& b) {
  if (b.empty()) throw input_error("completion_to_basis: empty input");
  std::size_t k = b.size(), n = b[0].size();
  SnfResult s = smith_normal_form(b);
  for (const Int& d : s.divisors)
    if (d != 1)
      throw input_error("completion_to_basis: rows not a saturated basis");
  if (s.divisors.size() != k)
    throw input_error("completion_to_basis: rows not independent");
  Mat vinv = unimodular_inverse(s.V);
  // B = U^{-1} [I 0] V^{-1}; rows k..n-1 of V^{-1} complete the row span.
  Mat full = b;
  for (std::size_t i = k; i < n; ++i) full.push_back(vinv[i]);
  if (!is_unimodular_matrix(full))
    throw input_error("completion_to_basis: completion failed");
  return full;
}

// Canonical projection Z^n -> Z^(n-k) with kernel exactly the saturated
// lattice spanned by the rows of L, together with an integral lift
// (proj * lift^T = identity).  For empty L the projection is the identity.
struct QuotientMap {
  Mat proj;  // (n-k) x n
  Mat lift;  // (n-k) x n, rows lift the quotient basis
};

inline QuotientMap quotient_by(const Mat& lin, std::size_t n) {
  if (lin.empty()) return {identity_matrix(n), identity_matrix(n)};
  Mat sat = saturate_rows(lin);
  if (sat.size() != lin.size())
    throw input_error("quotient_by: lineality basis not saturated/independent");
  Mat w = completion_to_basis(sat);
  Mat winv_t = transpose(unimodular_inverse(w));
  QuotientMap q;
  for (std::size_t i = sat.size(); i < n; ++i) {
    q.proj.push_back(winv_t[i]);
    q.lift.push_back(w[i]);
  }
  return q;
}

// A splitting N = Nbar ⊕ N_U with the dual splitting M = Mbar ⊕ M_U,
// Mbar = Ann(N_U) and M_U = Ann(Nbar).  Coordinates on Mbar are dual to the
// Nbar basis, so the pairing in split coordinates is the dot product.
struct LatticeSplitting {
  std::size_t n = 0;
  Mat nbar;  // rows: basis of Nbar
  Mat nu;    // rows: basis of N_U (may be empty)
  Mat mbar;  // rows: dual basis vectors annihilating N_U
  Mat mu;    // rows: dual basis vectors annihilating Nbar

  std::size_t nbar_rank() const { return nbar.size(); }
  std::size_t nu_rank() const { return nu.size(); }

  // Coordinates of x in the stacked basis [nbar; nu].
  std::pair<Vec, Vec> decompose_n(const Vec& x) const {
    Vec cb(nbar.size()), cu(nu.size());
    for (std::size_t i = 0; i < nbar.size(); ++i) cb[i] = dot(mbar[i], x);
    for (std::size_t i = 0; i < nu.size(); ++i) cu[i] = dot(mu[i], x);
    return {cb, cu};
  }

  Vec compose_n(const Vec& cb, const Vec& cu) const {
    Vec x = zero_vec(n);
    for (std::size_t i = 0; i < cb.size(); ++i)
      x = vec_add(x, vec_scale(cb[i], nbar[i]));
    for (std::size_t i = 0; i < cu.size(); ++i)
      x = vec_add(x, vec_scale(cu[i], nu[i]));
    return x;
  }

  // Coordinates of m in the stacked dual basis [mbar; mu].
  std::pair<Vec, Vec> decompose_m(const Vec& m) const {
    Vec cb(nbar.size()), cu(nu.size());
    for (std::size_t i = 0; i < nbar.size(); ++i) cb[i] = dot(nbar[i], m);
    for (std::size_t i = 0; i < nu.size(); ++i) cu[i] = dot(nu[i], m);
    return {cb, cu};
  }

  Vec compose_m(const Vec& cb, const Vec& cu) const {
    Vec m = zero_vec(n);
    for (std::size_t i = 0; i < cb.size(); ++i)
      m = vec_add(m, vec_scale(cb[i], mbar[i]));
    for (std::size_t i = 0; i < cu.size(); ++i)
      m = vec_add(m, vec_scale(cu[i], mu[i]));
    return m;
  }
};

inline LatticeSplitting make_splitting(const Mat& nbar, const Mat& nu) {
  if (nbar.empty()) throw input_error("make_splitting: Nbar must be nonzero");
  LatticeSplitting s;
  s.n = nbar[0].size();
  s.nbar = nbar;
  s.nu = nu;
  Mat stacked = nbar;
  for (const Vec& r : nu) stacked.push_back(r);
  if (stacked.size() != s.n || !is_unimodular_matrix(stacked))
    throw input_error("make_splitting: bases do not form a basis of Z^n");
  Mat dual = transpose(unimodular_inverse(stacked));
  for (std::size_t i = 0; i < nbar.size(); ++i) s.mbar.push_back(dual[i]);
  for (std::size_t i = nbar.size(); i < s.n; ++i) s.mu.push_back(dual[i]);
  return s;
}

// Splitting with Nbar given and N_U the canonical complement.
inline LatticeSplitting splitting_from_nbar(const Mat& nbar) {
  Mat sat = saturate_rows(nbar);
  if (sat.size() != nbar.size())
    throw input_error("splitting_from_nbar: basis not saturated/independent");
  Mat full = completion_to_basis(nbar);
  Mat nu(full.begin() + static_cast<std::ptrdiff_t>(nbar.size()), full.end());
  return make_splitting(nbar, nu);
}

// Splitting with N_U given and Nbar the canonical complement.
inline LatticeSplitting splitting_from_nu(const Mat& nu, std::size_t n) {
  if (nu.empty()) {
    return make_splitting(identity_matrix(n), {});
  }
  Mat full = completion_to_basis(nu);
  Mat nbar(full.begin() + static_cast<std::ptrdiff_t>(nu.size()), full.end());
  return make_splitting(nbar, nu);
}

}  // namespace cracklat
