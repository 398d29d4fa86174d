#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <utility>

#include "cracklat/matrix.hpp"

namespace cracklat {

namespace detail {

inline bool subset_of(const std::vector<bool>& a, const std::vector<bool>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] && !b[i]) return false;
  return true;
}

// Extreme rays of the pointed cone {x : A x >= 0}; requires rank(A) = n.
// Double description with the combinatorial adjacency test.
inline Mat dd_rays(const Mat& a) {
  if (a.empty()) throw input_error("dd_rays: no inequalities");
  const std::size_t m = a.size(), n = a[0].size();
  if (rank_of(a) != n)
    throw input_error("dd_rays: cone not pointed (inequality rank deficit)");

  std::vector<std::size_t> basis_idx, rest_idx;
  Mat basis;
  for (std::size_t i = 0; i < m; ++i) {
    if (basis.size() < n) {
      Mat trial = basis;
      trial.push_back(a[i]);
      if (rank_of(trial) > basis.size()) {
        basis = std::move(trial);
        basis_idx.push_back(i);
        continue;
      }
    }
    rest_idx.push_back(i);
  }
  auto inv = inverse_rational(basis);
  if (!inv) throw input_error("dd_rays: degenerate initial basis");

  Mat rays;
  for (std::size_t j = 0; j < n; ++j) {
    QVec col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = (*inv)[i][j];
    rays.push_back(primitive_vector(col));
  }

  std::vector<std::size_t> processed = basis_idx;
  for (std::size_t cur : rest_idx) {
    std::vector<Int> val(rays.size());
    bool has_neg = false;
    for (std::size_t r = 0; r < rays.size(); ++r) {
      val[r] = dot(a[cur], rays[r]);
      if (val[r] < 0) has_neg = true;
    }
    if (!has_neg) {
      processed.push_back(cur);
      continue;
    }
    std::vector<std::vector<bool>> tight(rays.size(),
                                         std::vector<bool>(processed.size()));
    for (std::size_t r = 0; r < rays.size(); ++r)
      for (std::size_t k = 0; k < processed.size(); ++k)
        tight[r][k] = dot(a[processed[k]], rays[r]) == 0;

    auto adjacent = [&](std::size_t p, std::size_t q) {
      std::vector<bool> common(processed.size());
      for (std::size_t k = 0; k < processed.size(); ++k)
        common[k] = tight[p][k] && tight[q][k];
      for (std::size_t r = 0; r < rays.size(); ++r) {
        if (r == p || r == q) continue;
        if (subset_of(common, tight[r])) return false;
      }
      return true;
    };

    Mat next;
    for (std::size_t r = 0; r < rays.size(); ++r)
      if (val[r] >= 0) next.push_back(rays[r]);
    for (std::size_t p = 0; p < rays.size(); ++p) {
      if (val[p] <= 0) continue;
      for (std::size_t q = 0; q < rays.size(); ++q) {
        if (val[q] >= 0 || !adjacent(p, q)) continue;
        Vec nr = vec_sub(vec_scale(val[p], rays[q]), vec_scale(val[q], rays[p]));
        nr = primitive_vector(nr);
        bool dup = false;
        for (const Vec& e : next)
          if (e == nr) {
            dup = true;
            break;
          }
        if (!dup) next.push_back(nr);
      }
    }
    rays = std::move(next);
    processed.push_back(cur);
    if (rays.empty()) break;
  }
  std::sort(rays.begin(), rays.end());
  return rays;
}

inline Rat rat_floor(const Rat& x) {
  return Rat(floor_div(Int(numerator(x)), Int(denominator(x))));
}

inline Rat rat_ceil(const Rat& x) { return -rat_floor(-x); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Rational cones

struct RationalCone {
  std::size_t ambient = 0;
  Mat gens;   // primitive generators; extreme rays when the cone is pointed
  QVec apex;  // defaults to the origin
};

inline RationalCone make_cone(std::size_t ambient, Mat gens, QVec apex = {}) {
  RationalCone c;
  c.ambient = ambient;
  if (apex.empty()) apex = zero_qvec(ambient);
  c.apex = std::move(apex);
  for (Vec& g : gens) {
    if (is_zero(g)) continue;
    Vec p = primitive_vector(g);
    bool dup = false;
    for (const Vec& e : c.gens)
      if (e == p) {
        dup = true;
        break;
      }
    if (!dup) c.gens.push_back(std::move(p));
  }
  std::sort(c.gens.begin(), c.gens.end());
  return c;
}

// Inward facet normals (with the span equations) of cone(gens) at the origin:
// the cone is {x : eq . x = 0 for eq in equations, f . x >= 0 for f in facets}.
struct ConeHRep {
  Mat equations;
  Mat facets;
};

inline ConeHRep cone_hrep(const RationalCone& c) {
  ConeHRep h;
  if (c.gens.empty()) {
    h.equations = identity_matrix(c.ambient);
    return h;
  }
  h.equations = integer_kernel(c.gens);
  Mat span = saturate_rows(c.gens);
  std::size_t d = span.size();
  Mat span_t = transpose(span);
  Mat chart_gens;
  for (const Vec& g : c.gens) {
    auto y = solve_rational(span_t, to_q(g));
    if (!y) throw input_error("cone_hrep: generator outside saturated span");
    chart_gens.push_back(to_int(*y));
  }
  (void)d;
  Mat chart_facets = detail::dd_rays(chart_gens);  // dual cone extreme rays
  for (const Vec& f : chart_facets) {
    auto lifted = solve_integral(span, f);
    if (!lifted) throw input_error("cone_hrep: facet lift failed");
    h.facets.push_back(*lifted);
  }
  std::sort(h.facets.begin(), h.facets.end());
  return h;
}

// Basis of the lineality space {x in C : -x in C} of cone(gens).
inline Mat cone_lineality(const RationalCone& c) {
  if (c.gens.empty()) return {};
  ConeHRep h = cone_hrep(c);
  Mat all = h.equations;
  for (const Vec& f : h.facets) all.push_back(f);
  if (all.empty()) return identity_matrix(c.ambient);
  return integer_kernel(all);
}

inline bool is_pointed(const RationalCone& c) {
  return cone_lineality(c).empty();
}

// Canonical extreme rays of a pointed cone.
inline Mat cone_extreme_rays(const RationalCone& c) {
  if (c.gens.empty()) return {};
  ConeHRep h = cone_hrep(c);
  Mat all = h.facets;
  for (const Vec& e : h.equations) {
    all.push_back(e);
    all.push_back(vec_neg(e));
  }
  if (rank_of(all) != c.ambient)
    throw input_error("cone_extreme_rays: cone not pointed");
  Mat rays = detail::dd_rays(all);
  return rays;
}

// Def-style unimodularity: pointed, simplicial, and the primitive ray matrix
// extends to a basis of the ambient lattice (all SNF divisors 1).
inline bool is_unimodular_cone(const RationalCone& c) {
  Mat rays = cone_extreme_rays(c);  // throws on non-pointed input
  if (rays.empty()) return true;
  if (rank_of(rays) != rays.size()) return false;  // non-simplicial
  SnfResult s = smith_normal_form(rays);
  for (const Int& d : s.divisors)
    if (d != 1) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Polytopes

struct Face {
  int dim = -1;                     // -1 encodes the empty face
  std::vector<std::size_t> verts;   // sorted vertex indices
  std::vector<std::size_t> tight;   // sorted tight inequality indices
  bool operator==(const Face&) const = default;
};

struct FaceLattice {
  std::vector<Face> faces;  // sorted by (dim, verts); includes empty and top
  std::vector<std::size_t> count_by_dim;  // index d -> number of d-faces
};

struct LatticePolytope {
  std::size_t ambient = 0;
  int dim = -1;
  QMat verts;     // canonical: lexicographically sorted, exact
  QVec base;      // chart origin in the affine span (0 for full-dimensional)
  Mat dirbasis;   // dim x ambient rows: saturated basis of the direction lattice
  bool lattice_affine = false;  // base is a lattice point of the affine span
  Mat fnormals;   // irredundant facet normals in chart coordinates
  Vec flevels;    // fnormals[i] . y >= flevels[i]

  mutable std::shared_ptr<const FaceLattice> face_cache;
  mutable std::shared_ptr<std::mutex> cache_mutex =
      std::make_shared<std::mutex>();

  bool full_dim() const { return dim >= 0 && std::size_t(dim) == ambient; }

  bool operator==(const LatticePolytope& o) const {
    return ambient == o.ambient && dim == o.dim && verts == o.verts;
  }

  // Chart coordinates y with x = base + y * dirbasis; error off the span.
  QVec chart(const QVec& x) const {
    QVec rel = qvec_sub(x, base);
    if (full_dim()) return rel;  // identity chart by construction
    if (dim == 0) {
      if (!is_zero(rel)) throw input_error("chart: point off the affine span");
      return {};
    }
    auto y = solve_rational(transpose(dirbasis), rel);
    if (!y) throw input_error("chart: point off the affine span");
    QVec back = zero_qvec(ambient);
    for (std::size_t i = 0; i < y->size(); ++i)
      for (std::size_t j = 0; j < ambient; ++j)
        back[j] += (*y)[i] * Rat(dirbasis[i][j]);
    if (back != rel) throw input_error("chart: point off the affine span");
    return *y;
  }

  QVec unchart(const QVec& y) const {
    QVec x = base;
    for (std::size_t i = 0; i < y.size(); ++i)
      for (std::size_t j = 0; j < ambient; ++j)
        x[j] += y[i] * Rat(dirbasis[i][j]);
    return x;
  }

  bool in_affine_span(const QVec& x) const {
    try {
      chart(x);
      return true;
    } catch (const input_error&) {
      return false;
    }
  }

  bool contains(const QVec& x) const {
    if (!in_affine_span(x)) return false;
    QVec y = chart(x);
    for (std::size_t i = 0; i < fnormals.size(); ++i)
      if (dot(fnormals[i], y) < Rat(flevels[i])) return false;
    return true;
  }
};

namespace detail {

inline QMat dedupe_sorted(QMat pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

// Farkas certificate of infeasibility for {x : normals . x >= levels}:
// lambda >= 0 with lambda^T normals = 0 and lambda^T levels > 0, if one
// exists among the extreme rays of the multiplier cone.
inline std::optional<Vec> farkas_witness(const Mat& normals,
                                         const Vec& levels) {
  if (normals.empty()) return std::nullopt;
  std::size_t m = normals.size();
  Mat sys = identity_matrix(m);
  for (const Vec& row : transpose(normals)) {
    sys.push_back(row);
    sys.push_back(vec_neg(row));
  }
  for (const Vec& lam : dd_rays(sys))
    if (dot(lam, levels) > 0) return lam;
  return std::nullopt;
}

// Vertices of {y : normals . y >= levels} via homogenization, with the
// certificates the spec requires on unbounded or empty input.
inline QMat hrep_vertices(const Mat& normals, const Vec& levels,
                          std::size_t n) {
  Mat rows;
  for (std::size_t i = 0; i < normals.size(); ++i) {
    Vec row{-levels[i]};
    row.insert(row.end(), normals[i].begin(), normals[i].end());
    rows.push_back(std::move(row));
  }
  {
    Vec top = zero_vec(n + 1);
    top[0] = 1;
    rows.push_back(std::move(top));
  }
  Mat rays;
  try {
    rays = dd_rays(rows);
  } catch (const input_error&) {
    // rank deficit: the recession cone {v : normals v >= 0} contains a line
    if (auto w = farkas_witness(normals, levels))
      throw input_error("Empty: infeasibility witness lambda = " + str(*w));
    Mat rec = normals.empty() ? identity_matrix(n) : integer_kernel(normals);
    throw input_error("Unbounded: recession line through " +
                      (rec.empty() ? std::string("?") : str(rec[0])));
  }
  QMat vertices;
  Mat recession;
  for (const Vec& r : rays) {
    if (r[0] == 0) {
      recession.push_back(Vec(r.begin() + 1, r.end()));
      continue;
    }
    QVec v(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = Rat(r[j + 1], r[0]);
    vertices.push_back(std::move(v));
  }
  if (vertices.empty()) {
    if (auto w = farkas_witness(normals, levels))
      throw input_error("Empty: infeasibility witness lambda = " + str(*w));
  }
  if (!recession.empty())
    throw input_error("Unbounded: recession ray " + str(recession[0]));
  if (vertices.empty()) throw input_error("Empty: no vertices");
  return dedupe_sorted(vertices);
}

}  // namespace detail

// Shared construction tail: points are known to be exactly the candidate
// vertex set union possibly redundant points of their hull.
inline LatticePolytope polytope_from_points(std::size_t ambient,
                                            const QMat& points) {
  if (points.empty()) throw input_error("polytope_from_points: no points");
  for (const QVec& p : points)
    if (p.size() != ambient)
      throw input_error("polytope_from_points: dimension mismatch");
  QMat pts = detail::dedupe_sorted(points);

  LatticePolytope p;
  p.ambient = ambient;

  Mat dirs;
  for (std::size_t i = 1; i < pts.size(); ++i)
    dirs.push_back(clear_denominators(qvec_sub(pts[i], pts[0])));
  p.dirbasis = dirs.empty() ? Mat{} : saturate_rows(dirs);
  p.dim = static_cast<int>(p.dirbasis.size());

  if (p.full_dim()) {
    p.base = zero_qvec(ambient);
    p.dirbasis = identity_matrix(ambient);
    p.lattice_affine = true;
  } else {
    Mat eqs = p.dim == 0 ? identity_matrix(ambient)
                         : integer_kernel(p.dirbasis);
    // eqs rows e satisfy e . (x - pts[0]) = 0 on the span
    QVec rhs(eqs.size());
    bool integral = true;
    for (std::size_t i = 0; i < eqs.size(); ++i) {
      rhs[i] = dot(eqs[i], pts[0]);
      integral = integral && is_integral(rhs[i]);
    }
    std::optional<Vec> lattice_base;
    if (integral) lattice_base = solve_integral(eqs, to_int(rhs));
    if (lattice_base) {
      p.base = to_q(*lattice_base);
      p.lattice_affine = true;
    } else {
      p.base = pts[0];
      p.lattice_affine = false;
    }
  }

  if (p.dim == 0) {
    p.verts = pts;
    if (pts.size() != 1)
      throw input_error("polytope_from_points: inconsistent 0-dim input");
    return p;
  }

  QMat chart_pts;
  for (const QVec& q : pts) chart_pts.push_back(p.chart(q));

  // facets of the hull in chart coordinates: extreme rays of the cone of
  // valid inequalities {(c, a) : c + a . y_i >= 0 for all i}
  Mat lifted;
  for (const QVec& y : chart_pts) {
    QVec row(y.size() + 1);
    row[0] = 1;
    for (std::size_t j = 0; j < y.size(); ++j) row[j + 1] = y[j];
    lifted.push_back(clear_denominators(row));
  }
  Mat valid = detail::dd_rays(lifted);
  for (const Vec& ca : valid) {
    Vec normal(ca.begin() + 1, ca.end());
    if (is_zero(normal))
      throw input_error("polytope_from_points: degenerate facet");
    p.fnormals.push_back(std::move(normal));
    p.flevels.push_back(-ca[0]);
  }

  // vertices = points whose tight facet normals span the chart
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Mat tight;
    for (std::size_t f = 0; f < p.fnormals.size(); ++f)
      if (dot(p.fnormals[f], chart_pts[i]) == Rat(p.flevels[f]))
        tight.push_back(p.fnormals[f]);
    if (tight.size() >= std::size_t(p.dim) &&
        rank_of(tight) == std::size_t(p.dim))
      keep.push_back(i);
  }
  for (std::size_t i : keep) p.verts.push_back(pts[i]);
  p.verts = detail::dedupe_sorted(p.verts);

  // cross-validation of the two descriptions
  for (const QVec& q : pts)
    for (std::size_t f = 0; f < p.fnormals.size(); ++f)
      if (dot(p.fnormals[f], p.chart(q)) < Rat(p.flevels[f]))
        throw input_error("polytope_from_points: facet excludes input point");
  for (std::size_t f = 0; f < p.fnormals.size(); ++f) {
    QMat tight;
    for (const QVec& v : p.verts) {
      QVec y = p.chart(v);
      if (dot(p.fnormals[f], y) == Rat(p.flevels[f])) tight.push_back(y);
    }
    if (tight.empty())
      throw input_error("polytope_from_points: facet misses all vertices");
    Mat dirs2;
    for (std::size_t i = 1; i < tight.size(); ++i)
      dirs2.push_back(clear_denominators(qvec_sub(tight[i], tight[0])));
    std::size_t affdim = dirs2.empty() ? 0 : rank_of(dirs2);
    if (affdim + 1 != std::size_t(p.dim))
      throw input_error("polytope_from_points: redundant inequality kept");
  }
  return p;
}

inline LatticePolytope polytope_from_points(std::size_t ambient,
                                            const Mat& points) {
  QMat q;
  for (const Vec& v : points) q.push_back(to_q(v));
  return polytope_from_points(ambient, q);
}

// dual_description on an inequality list {x : normals . x >= levels}.
// Detects implicit equalities (lower-dimensional results) exactly.
inline LatticePolytope polytope_from_inequalities(std::size_t ambient,
                                                  const Mat& normals,
                                                  const Vec& levels) {
  if (normals.size() != levels.size())
    throw input_error("polytope_from_inequalities: size mismatch");
  for (const Vec& a : normals)
    if (a.size() != ambient)
      throw input_error("polytope_from_inequalities: dimension mismatch");
  QMat vertices = detail::hrep_vertices(normals, levels, ambient);
  return polytope_from_points(ambient, vertices);
}

// ---------------------------------------------------------------------------

inline bool is_lattice_polytope(const LatticePolytope& p) {
  for (const QVec& v : p.verts)
    if (!is_integral(v)) return false;
  return true;
}

inline bool origin_interior(const LatticePolytope& p) {
  if (!p.full_dim()) return false;
  for (std::size_t i = 0; i < p.fnormals.size(); ++i)
    if (p.flevels[i] >= 0) return false;
  return true;
}

// Fano: full-dimensional lattice polytope, origin interior, primitive vertices.
inline bool is_fano(const LatticePolytope& p) {
  if (!p.full_dim() || !is_lattice_polytope(p) || !origin_interior(p))
    return false;
  for (const QVec& v : p.verts)
    if (primitive_vector(to_int(v)) != to_int(v)) return false;
  return true;
}

// P° = {u : <u, v> >= -1 for all v in P}; exact involution, no dual
// description pass (vertices and facets swap roles).
inline LatticePolytope polar_dual(const LatticePolytope& p) {
  if (!p.full_dim())
    throw input_error("polar_dual: polytope not full-dimensional");
  if (!origin_interior(p))
    throw input_error("OriginNotInterior: polar dual undefined");
  LatticePolytope q;
  q.ambient = p.ambient;
  q.dim = static_cast<int>(p.ambient);
  q.base = zero_qvec(p.ambient);
  q.dirbasis = identity_matrix(p.ambient);
  q.lattice_affine = true;
  for (std::size_t i = 0; i < p.fnormals.size(); ++i) {
    QVec u(p.ambient);
    for (std::size_t j = 0; j < p.ambient; ++j)
      u[j] = Rat(p.fnormals[i][j]) / Rat(-p.flevels[i]);
    q.verts.push_back(std::move(u));
  }
  q.verts = detail::dedupe_sorted(q.verts);
  for (const QVec& v : p.verts) {
    Int mult = 1;
    Vec w = clear_denominators(v, &mult);
    q.fnormals.push_back(std::move(w));
    q.flevels.push_back(-mult);
  }
  // validation: every dual vertex satisfies every dual facet, tightly on a
  // spanning set
  for (const QVec& u : q.verts) {
    Mat tight;
    for (std::size_t f = 0; f < q.fnormals.size(); ++f) {
      Rat s = dot(q.fnormals[f], u);
      if (s < Rat(q.flevels[f])) throw input_error("polar_dual: inconsistent");
      if (s == Rat(q.flevels[f])) tight.push_back(q.fnormals[f]);
    }
    if (rank_of(tight) != q.ambient)
      throw input_error("polar_dual: vertex candidate not a vertex");
  }
  return q;
}

inline bool check_reflexive(const LatticePolytope& p) {
  if (!is_fano(p)) throw input_error("check_reflexive: input not Fano");
  return is_lattice_polytope(polar_dual(p));
}

// dual_description: construct a polytope from either representation; both
// descriptions are populated and cross-validated, with certificates on
// unbounded or empty input.
inline LatticePolytope dual_description(std::size_t ambient,
                                        const QMat& points) {
  return polytope_from_points(ambient, points);
}

inline LatticePolytope dual_description(std::size_t ambient,
                                        const Mat& points) {
  return polytope_from_points(ambient, points);
}

inline LatticePolytope dual_description(std::size_t ambient,
                                        const Mat& normals,
                                        const Vec& levels) {
  return polytope_from_inequalities(ambient, normals, levels);
}

// All lattice points, lexicographically ordered in ambient coordinates.
inline Mat lattice_points(const LatticePolytope& p) {
  if (p.dim < 0) return {};
  if (p.dim == 0) {
    if (is_integral(p.verts[0])) return {to_int(p.verts[0])};
    return {};
  }
  if (!p.lattice_affine) return {};
  std::size_t d = static_cast<std::size_t>(p.dim);
  QMat chart_verts;
  for (const QVec& v : p.verts) chart_verts.push_back(p.chart(v));
  Vec lo(d), hi(d);
  for (std::size_t j = 0; j < d; ++j) {
    Rat mn = chart_verts[0][j], mx = chart_verts[0][j];
    for (const QVec& y : chart_verts) {
      mn = std::min(mn, y[j]);
      mx = std::max(mx, y[j]);
    }
    lo[j] = to_int(detail::rat_ceil(mn));
    hi[j] = to_int(detail::rat_floor(mx));
  }
  Mat out;
  Vec cur = lo;
  while (true) {
    bool inside = true;
    for (std::size_t f = 0; f < p.fnormals.size() && inside; ++f)
      inside = dot(p.fnormals[f], cur) >= p.flevels[f];
    if (inside) out.push_back(to_int(p.unchart(to_q(cur))));
    std::size_t j = 0;
    for (; j < d; ++j) {
      if (cur[j] < hi[j]) {
        ++cur[j];
        break;
      }
      cur[j] = lo[j];
    }
    if (j == d) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Face lattice

inline const FaceLattice& face_lattice(const LatticePolytope& p) {
  {
    std::lock_guard<std::mutex> g(*p.cache_mutex);
    if (p.face_cache) return *p.face_cache;
  }
  auto fl = std::make_shared<FaceLattice>();
  std::size_t nv = p.verts.size(), nf = p.fnormals.size();
  QMat chart_verts;
  for (const QVec& v : p.verts) chart_verts.push_back(p.chart(v));

  std::vector<std::vector<bool>> vert_tight(nv, std::vector<bool>(nf));
  for (std::size_t i = 0; i < nv; ++i)
    for (std::size_t f = 0; f < nf; ++f)
      vert_tight[i][f] = dot(p.fnormals[f], chart_verts[i]) == Rat(p.flevels[f]);

  auto face_of = [&](const std::vector<std::size_t>& vset) {
    Face face;
    face.verts = vset;
    for (std::size_t f = 0; f < nf; ++f) {
      bool all = true;
      for (std::size_t i : vset) all = all && vert_tight[i][f];
      if (all) face.tight.push_back(f);
    }
    if (vset.empty()) {
      face.dim = -1;
      return face;
    }
    Mat dirs;
    for (std::size_t i = 1; i < vset.size(); ++i)
      dirs.push_back(clear_denominators(
          qvec_sub(chart_verts[vset[i]], chart_verts[vset[0]])));
    face.dim = dirs.empty() ? 0 : static_cast<int>(rank_of(dirs));
    return face;
  };

  std::set<std::vector<std::size_t>> seen;
  std::vector<std::vector<std::size_t>> queue;
  std::vector<std::size_t> all(nv);
  for (std::size_t i = 0; i < nv; ++i) all[i] = i;
  queue.push_back(all);
  seen.insert(all);
  fl->faces.push_back(face_of(all));  // the polytope itself
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    std::vector<std::size_t> cur = queue[qi];
    for (std::size_t f = 0; f < nf; ++f) {
      std::vector<std::size_t> sub;
      for (std::size_t i : cur)
        if (vert_tight[i][f]) sub.push_back(i);
      if (sub.empty() || sub == cur) continue;
      if (seen.insert(sub).second) {
        queue.push_back(sub);
        fl->faces.push_back(face_of(sub));
      }
    }
  }
  fl->faces.push_back(face_of({}));  // empty face
  std::sort(fl->faces.begin(), fl->faces.end(),
            [](const Face& a, const Face& b) {
              return std::pair(a.dim, a.verts) < std::pair(b.dim, b.verts);
            });
  fl->count_by_dim.assign(static_cast<std::size_t>(p.dim) + 1, 0);
  for (const Face& f : fl->faces)
    if (f.dim >= 0) ++fl->count_by_dim[static_cast<std::size_t>(f.dim)];
  std::lock_guard<std::mutex> g(*p.cache_mutex);
  if (!p.face_cache) p.face_cache = fl;
  return *p.face_cache;
}

inline std::vector<Face> faces_of_dim(const LatticePolytope& p, int d) {
  std::vector<Face> out;
  for (const Face& f : face_lattice(p).faces)
    if (f.dim == d) out.push_back(f);
  return out;
}

// ---------------------------------------------------------------------------

// Tangent cone of P at the face F: cone over P - b for b in relint(F),
// apex placed at the lexicographically least vertex of F.
inline RationalCone tangent_cone(const LatticePolytope& p, const Face& f) {
  if (f.dim < 0 || f.verts.empty())
    throw input_error("tangent_cone: empty face");
  const QVec& apex = p.verts[f.verts[0]];
  Mat gens;
  for (std::size_t i = 0; i < p.verts.size(); ++i) {
    QVec d = qvec_sub(p.verts[i], apex);
    if (is_zero(d)) continue;
    gens.push_back(primitive_vector(d));
  }
  // relint directions of F span both ways
  for (std::size_t i : f.verts) {
    QVec d = qvec_sub(apex, p.verts[i]);
    if (is_zero(d)) continue;
    gens.push_back(primitive_vector(d));
  }
  RationalCone c = make_cone(p.ambient, gens, apex);
  // reduce to extreme structure when pointed
  Mat lin = cone_lineality(c);
  if (lin.empty()) {
    Mat rays = cone_extreme_rays(c);
    c.gens = rays;
  }
  return c;
}

inline Face vertex_face(const LatticePolytope& p, std::size_t vertex_index) {
  for (const Face& f : face_lattice(p).faces)
    if (f.dim == 0 && f.verts == std::vector<std::size_t>{vertex_index})
      return f;
  throw input_error("vertex_face: no such vertex");
}

// Dual face F* = {u in P° : <u, v> = -1 for all v in F}.
inline Face dual_face(const LatticePolytope& p, const LatticePolytope& polar,
                      const Face& f) {
  if (!check_reflexive(p))
    throw input_error("dual_face: polytope not reflexive");
  if (!(polar == polar_dual(p)))
    throw input_error("dual_face: polar argument mismatch");
  if (f.dim < 0 || f.dim == p.dim)
    throw input_error("dual_face: face must be proper and nonempty");
  std::vector<std::size_t> dual_verts;
  for (std::size_t u = 0; u < polar.verts.size(); ++u) {
    bool all = true;
    for (std::size_t i : f.verts)
      all = all && dot(polar.verts[u], p.verts[i]) == Rat(-1);
    if (all) dual_verts.push_back(u);
  }
  for (const Face& g : face_lattice(polar).faces)
    if (g.verts == dual_verts && g.dim >= 0) return g;
  throw input_error("dual_face: dual vertex set is not a face");
}

// Lattice length: number of lattice points on the segment minus one.
inline Int lattice_length(const QVec& a, const QVec& b) {
  if (!is_integral(a) || !is_integral(b))
    throw input_error("lattice_length: endpoints not lattice points");
  Vec d = vec_sub(to_int(b), to_int(a));
  if (is_zero(d)) return 0;
  return content(d);
}

inline Int lattice_length(const LatticePolytope& owner, const Face& edge) {
  if (edge.dim != 1 || edge.verts.size() != 2)
    throw input_error("lattice_length: not an edge");
  return lattice_length(owner.verts[edge.verts[0]],
                        owner.verts[edge.verts[1]]);
}

// Cayley sum: conv of the P_i placed at unit heights e_i in N x Z^r.
inline LatticePolytope cayley_sum(const std::vector<LatticePolytope>& ps) {
  if (ps.empty()) throw input_error("cayley_sum: empty list");
  std::size_t n = ps[0].ambient, r = ps.size();
  QMat pts;
  for (std::size_t i = 0; i < r; ++i) {
    if (ps[i].ambient != n)
      throw input_error("cayley_sum: mixed ambient lattices");
    for (const QVec& v : ps[i].verts) {
      QVec w = v;
      w.resize(n + r, Rat(0));
      w[n + i] = 1;
      pts.push_back(std::move(w));
    }
  }
  return polytope_from_points(n + r, pts);
}

// ---------------------------------------------------------------------------
// Transforms (used heavily by tests and the corpus builder)

inline LatticePolytope apply_unimodular(const LatticePolytope& p,
                                        const Mat& u) {
  if (!is_unimodular_matrix(u))
    throw input_error("apply_unimodular: matrix not unimodular");
  QMat pts;
  for (const QVec& v : p.verts) pts.push_back(mat_vec(u, v));
  return polytope_from_points(p.ambient, pts);
}

inline LatticePolytope translate(const LatticePolytope& p, const Vec& t) {
  QMat pts;
  for (const QVec& v : p.verts) pts.push_back(qvec_add(v, to_q(t)));
  return polytope_from_points(p.ambient, pts);
}

inline LatticePolytope dilate(const LatticePolytope& p, const Int& k) {
  QMat pts;
  for (const QVec& v : p.verts) pts.push_back(qvec_scale(Rat(k), v));
  return polytope_from_points(p.ambient, pts);
}

// Intersection of a polytope with extra half-spaces (ambient coordinates);
// the workhorse behind the cracked pieces P ∩ C.
inline LatticePolytope intersect_with_halfspaces(const LatticePolytope& p,
                                                 const Mat& normals,
                                                 const Vec& levels) {
  if (!p.full_dim())
    throw input_error("intersect_with_halfspaces: need full-dimensional input");
  Mat ns = p.fnormals;
  Vec ls = p.flevels;
  for (std::size_t i = 0; i < normals.size(); ++i) {
    ns.push_back(normals[i]);
    ls.push_back(levels[i]);
  }
  return polytope_from_inequalities(p.ambient, ns, ls);
}

// Minimal face of P containing a point of P: the unique face whose tight
// inequality set equals the set of inequalities tight at the point.
inline Face minimal_face_containing(const LatticePolytope& p, const QVec& x) {
  if (!p.contains(x)) throw input_error("minimal_face_containing: outside");
  QVec y = p.chart(x);
  std::vector<std::size_t> tight;
  for (std::size_t f = 0; f < p.fnormals.size(); ++f)
    if (dot(p.fnormals[f], y) == Rat(p.flevels[f])) tight.push_back(f);
  for (const Face& g : face_lattice(p).faces)
    if (g.dim >= 0 && g.tight == tight) return g;
  throw input_error("minimal_face_containing: no face found");
}

// Affine-lattice isomorphism search between polytopes of equal dimension:
// a chart-level unimodular map plus translation carrying vertices to
// vertices.  Returns the chart matrices when found.
struct AffineIso {
  Mat linear;  // d x d unimodular, acts on source chart coords (y -> y A^T)
  Vec shift;   // in target chart coords
};

inline std::optional<AffineIso> find_affine_lattice_iso(
    const LatticePolytope& a, const LatticePolytope& b) {
  if (a.dim != b.dim || a.verts.size() != b.verts.size()) return std::nullopt;
  if (!a.lattice_affine || !b.lattice_affine) return std::nullopt;
  std::size_t d = static_cast<std::size_t>(std::max(a.dim, 0));
  QMat ay, by;
  for (const QVec& v : a.verts) ay.push_back(a.chart(v));
  for (const QVec& v : b.verts) by.push_back(b.chart(v));
  if (d == 0) return AffineIso{{}, {}};

  // affinely independent frame in a
  std::vector<std::size_t> frame{0};
  Mat dirs;
  for (std::size_t i = 1; i < ay.size() && dirs.size() < d; ++i) {
    Mat trial = dirs;
    trial.push_back(clear_denominators(qvec_sub(ay[i], ay[0])));
    if (rank_of(trial) > dirs.size()) {
      dirs = std::move(trial);
      frame.push_back(i);
    }
  }
  if (frame.size() != d + 1) return std::nullopt;

  std::vector<std::size_t> target(d + 1);
  std::vector<bool> used(by.size(), false);
  std::optional<AffineIso> found;

  auto try_assignment = [&]() -> bool {
    // solve for linear map L and shift with by[target[k]] = L(ay[frame[k]]) + t
    QMat lhs;  // rows: ay[frame[k]] - ay[frame[0]]
    QMat rhs;
    for (std::size_t k = 1; k <= d; ++k) {
      lhs.push_back(qvec_sub(ay[frame[k]], ay[frame[0]]));
      rhs.push_back(qvec_sub(by[target[k]], by[target[0]]));
    }
    auto lhs_inv = inverse_rational(lhs);
    if (!lhs_inv) return false;
    // L^T = lhs^{-1} * rhs
    QMat lt(d, zero_qvec(d));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t t = 0; t < d; ++t)
          lt[i][j] += (*lhs_inv)[i][t] * rhs[t][j];
    Mat linear(d, zero_vec(d));
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        if (!is_integral(lt[j][i])) return false;
        linear[i][j] = to_int(lt[j][i]);
      }
    if (!is_unimodular_matrix(linear)) return false;
    QVec t0 = qvec_sub(by[target[0]], mat_vec(linear, ay[frame[0]]));
    if (!is_integral(t0)) return false;
    Vec shift = to_int(t0);
    // full vertex-set bijection check
    std::set<QVec> bset(by.begin(), by.end());
    for (const QVec& y : ay) {
      QVec img = mat_vec(linear, y);
      for (std::size_t j = 0; j < d; ++j) img[j] += Rat(shift[j]);
      if (!bset.count(img)) return false;
    }
    found = AffineIso{linear, shift};
    return true;
  };

  std::function<bool(std::size_t)> rec = [&](std::size_t k) -> bool {
    if (k == d + 1) return try_assignment();
    for (std::size_t j = 0; j < by.size(); ++j) {
      if (used[j]) continue;
      used[j] = true;
      target[k] = j;
      if (rec(k + 1)) return true;
      used[j] = false;
    }
    return false;
  };
  rec(0);
  return found;
}

}  // namespace cracklat
