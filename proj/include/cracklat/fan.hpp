#pragma once

#include "cracklat/polytope.hpp"

namespace cracklat {

// A fan is stored through its reduced picture: rays and maximal cones in the
// quotient of the ambient lattice by the minimal cone (the lineality space
// shared by every cone).  `qm` carries the canonical projection/section pair
// between the two lattices; it is the identity when the minimal cone is zero.
struct Fan {
  std::size_t ambient = 0;
  Mat lin;  // canonical saturated basis of the minimal cone's lattice
  QuotientMap qm;
  std::size_t reduced = 0;
  Mat rays;  // primitive, lexicographically sorted, reduced coordinates
  std::vector<std::vector<std::size_t>> cones;  // maximal cones, sorted
  // (factor, in-factor label) per ray for product fans; empty otherwise
  std::vector<std::pair<std::size_t, std::size_t>> labels;

  bool operator==(const Fan& o) const {
    return ambient == o.ambient && lin == o.lin && rays == o.rays &&
           cones == o.cones;
  }
};

struct ToricDivisor {
  Vec a;  // one coefficient per fan ray, in the fan's canonical ray order
};

inline Fan make_fan(std::size_t ambient, const Mat& lin,
                    const std::vector<Mat>& cone_gens) {
  Fan f;
  f.ambient = ambient;
  f.lin = lin.empty() ? Mat{} : saturate_rows(lin);
  f.qm = quotient_by(f.lin, ambient);
  f.reduced = ambient - f.lin.size();

  std::vector<Mat> reduced_cones;
  for (const Mat& gens : cone_gens) {
    Mat red;
    for (const Vec& g : gens) red.push_back(mat_vec(f.qm.proj, g));
    RationalCone c = make_cone(f.reduced, red);
    Mat rays;
    try {
      rays = cone_extreme_rays(c);
    } catch (const input_error&) {
      throw input_error(
          "make_fan: cone has lineality beyond the minimal cone");
    }
    reduced_cones.push_back(std::move(rays));
  }

  for (const Mat& rc : reduced_cones)
    for (const Vec& r : rc) {
      bool dup = false;
      for (const Vec& e : f.rays)
        if (e == r) {
          dup = true;
          break;
        }
      if (!dup) f.rays.push_back(r);
    }
  std::sort(f.rays.begin(), f.rays.end());

  for (const Mat& rc : reduced_cones) {
    std::vector<std::size_t> idx;
    for (const Vec& r : rc)
      idx.push_back(std::size_t(
          std::lower_bound(f.rays.begin(), f.rays.end(), r) -
          f.rays.begin()));
    std::sort(idx.begin(), idx.end());
    f.cones.push_back(std::move(idx));
  }
  std::sort(f.cones.begin(), f.cones.end());
  for (std::size_t i = 0; i + 1 < f.cones.size(); ++i)
    if (f.cones[i] == f.cones[i + 1])
      throw input_error("make_fan: duplicate maximal cone");
  for (std::size_t i = 0; i < f.cones.size(); ++i)
    for (std::size_t j = 0; j < f.cones.size(); ++j)
      if (i != j && f.cones[i].size() < f.cones[j].size() &&
          std::includes(f.cones[j].begin(), f.cones[j].end(),
                        f.cones[i].begin(), f.cones[i].end()))
        throw input_error("make_fan: non-maximal cone listed");
  return f;
}

inline Fan make_fan_reduced(std::size_t rank,
                            const std::vector<Mat>& cone_gens) {
  return make_fan(rank, {}, cone_gens);
}

inline RationalCone fan_cone(const Fan& f, std::size_t ci) {
  Mat gens;
  for (std::size_t r : f.cones[ci]) gens.push_back(f.rays[r]);
  return make_cone(f.reduced, gens);
}

// Inequalities carving the ambient-coordinate preimage of a maximal cone.
inline Mat fan_cone_ambient_normals(const Fan& f, std::size_t ci) {
  ConeHRep h = cone_hrep(fan_cone(f, ci));
  Mat pt = transpose(f.qm.proj);
  Mat out;
  for (const Vec& e : h.equations) {
    out.push_back(mat_vec(pt, e));
    out.push_back(vec_neg(mat_vec(pt, e)));
  }
  for (const Vec& g : h.facets) out.push_back(mat_vec(pt, g));
  return out;
}

inline bool is_smooth_fan(const Fan& f) {
  for (std::size_t ci = 0; ci < f.cones.size(); ++ci) {
    Mat rays;
    for (std::size_t r : f.cones[ci]) rays.push_back(f.rays[r]);
    if (rays.empty()) continue;
    if (rank_of(rays) != rays.size()) return false;
    for (const Int& d : smith_normal_form(rays).divisors)
      if (d != 1) return false;
  }
  return true;
}

namespace detail {

// walls: map from sorted tight-ray index set -> incident (cone, facet) list
inline std::map<std::vector<std::size_t>, std::vector<std::size_t>> fan_walls(
    const Fan& f) {
  std::map<std::vector<std::size_t>, std::vector<std::size_t>> walls;
  for (std::size_t ci = 0; ci < f.cones.size(); ++ci) {
    RationalCone c = fan_cone(f, ci);
    ConeHRep h = cone_hrep(c);
    for (const Vec& facet : h.facets) {
      std::vector<std::size_t> tight;
      for (std::size_t r : f.cones[ci])
        if (dot(facet, f.rays[r]) == 0) tight.push_back(r);
      walls[tight].push_back(ci);
    }
  }
  return walls;
}

inline bool is_face_of_cone(const Fan& f, const std::vector<std::size_t>& cone,
                            const std::vector<std::size_t>& subset) {
  if (subset.empty()) return true;
  Mat gens;
  for (std::size_t r : cone) gens.push_back(f.rays[r]);
  ConeHRep h = cone_hrep(make_cone(f.reduced, gens));
  // facets tight on the whole subset
  Mat tight_facets;
  for (const Vec& facet : h.facets) {
    bool all = true;
    for (std::size_t r : subset) all = all && dot(facet, f.rays[r]) == 0;
    if (all) tight_facets.push_back(facet);
  }
  // minimal face containing the subset = cone rays tight on those facets
  std::vector<std::size_t> minimal;
  for (std::size_t r : cone) {
    bool all = true;
    for (const Vec& facet : tight_facets) all = all && dot(facet, f.rays[r]) == 0;
    if (all) minimal.push_back(r);
  }
  return minimal == subset;
}

}  // namespace detail

inline bool is_complete_fan(const Fan& f) {
  if (f.reduced == 0)
    return f.cones.size() == 1 && f.cones[0].empty();
  if (f.cones.empty()) return false;
  for (std::size_t ci = 0; ci < f.cones.size(); ++ci) {
    Mat rays;
    for (std::size_t r : f.cones[ci]) rays.push_back(f.rays[r]);
    if (rays.empty() || rank_of(rays) != f.reduced) return false;
  }
  auto walls = detail::fan_walls(f);
  std::vector<std::vector<std::size_t>> adj(f.cones.size());
  for (const auto& [key, owners] : walls) {
    if (owners.size() != 2) return false;
    adj[owners[0]].push_back(owners[1]);
    adj[owners[1]].push_back(owners[0]);
  }
  std::vector<bool> seen(f.cones.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    std::size_t c = stack.back();
    stack.pop_back();
    for (std::size_t d : adj[c])
      if (!seen[d]) {
        seen[d] = true;
        stack.push_back(d);
      }
  }
  for (bool s : seen)
    if (!s) return false;
  return true;
}

// Pairwise common-face validation; intended for the modest fans in scope.
inline void validate_fan(const Fan& f) {
  for (std::size_t i = 0; i < f.cones.size(); ++i)
    for (std::size_t j = i + 1; j < f.cones.size(); ++j) {
      RationalCone ci = fan_cone(f, i), cj = fan_cone(f, j);
      ConeHRep hi = cone_hrep(ci), hj = cone_hrep(cj);
      auto inside = [&](const Vec& x, const ConeHRep& h) {
        for (const Vec& e : h.equations)
          if (dot(e, x) != 0) return false;
        for (const Vec& g : h.facets)
          if (dot(g, x) < 0) return false;
        return true;
      };
      std::vector<std::size_t> xi, xj;
      for (std::size_t r : f.cones[i])
        if (inside(f.rays[r], hj)) xi.push_back(r);
      for (std::size_t r : f.cones[j])
        if (inside(f.rays[r], hi)) xj.push_back(r);
      if (xi != xj)
        throw input_error("validate_fan: cones do not meet in a common face");
      if (!detail::is_face_of_cone(f, f.cones[i], xi) ||
          !detail::is_face_of_cone(f, f.cones[j], xj))
        throw input_error("validate_fan: cones do not meet in a common face");
      // the intersection itself must not exceed the span of the shared rays
      Mat both = hi.facets;
      for (const Vec& e : hi.equations) {
        both.push_back(e);
        both.push_back(vec_neg(e));
      }
      both.insert(both.end(), hj.facets.begin(), hj.facets.end());
      for (const Vec& e : hj.equations) {
        both.push_back(e);
        both.push_back(vec_neg(e));
      }
      if (rank_of(both) != f.reduced)
        throw input_error("validate_fan: intersection has lineality");
      Mat inter = detail::dd_rays(both);
      Mat shared;
      for (std::size_t r : xi) shared.push_back(f.rays[r]);
      std::sort(shared.begin(), shared.end());
      if (inter != shared)
        throw input_error("validate_fan: cones overlap improperly");
    }
}

// ---------------------------------------------------------------------------
// Constructions

inline Fan spanning_fan(const LatticePolytope& p) {
  if (!is_fano(p)) throw input_error("spanning_fan: polytope not Fano");
  std::vector<Mat> cones;
  for (const Face& facet : faces_of_dim(p, p.dim - 1)) {
    Mat gens;
    for (std::size_t vi : facet.verts) gens.push_back(to_int(p.verts[vi]));
    cones.push_back(std::move(gens));
  }
  return make_fan_reduced(p.ambient, cones);
}

inline Fan normal_fan(const LatticePolytope& p) {
  if (!p.full_dim())
    throw input_error("normal_fan: polytope not full-dimensional");
  std::vector<Mat> cones;
  for (const Face& v : faces_of_dim(p, 0)) {
    Mat gens;
    for (std::size_t t : v.tight) gens.push_back(p.fnormals[t]);
    cones.push_back(std::move(gens));
  }
  return make_fan_reduced(p.ambient, cones);
}

inline Fan product_projective_fan(const std::vector<std::size_t>& ks) {
  if (ks.empty()) throw input_error("product_projective_fan: empty factor list");
  std::size_t rank = 0;
  for (std::size_t k : ks) {
    if (k < 1) throw input_error("product_projective_fan: factor k < 1");
    rank += k;
  }
  // rays per factor: unit block vectors and the negative sum
  std::vector<Mat> factor_rays;
  std::size_t off = 0;
  for (std::size_t k : ks) {
    Mat rays;
    Vec neg = zero_vec(rank);
    for (std::size_t j = 0; j < k; ++j) {
      Vec e = zero_vec(rank);
      e[off + j] = 1;
      neg[off + j] = -1;
      rays.push_back(e);
    }
    rays.push_back(neg);
    factor_rays.push_back(std::move(rays));
    off += k;
  }
  std::vector<Mat> cones;
  std::vector<std::size_t> omit(ks.size(), 0);
  while (true) {
    Mat gens;
    for (std::size_t i = 0; i < ks.size(); ++i)
      for (std::size_t j = 0; j <= ks[i]; ++j)
        if (j != omit[i]) gens.push_back(factor_rays[i][j]);
    cones.push_back(std::move(gens));
    std::size_t i = 0;
    for (; i < ks.size(); ++i) {
      if (omit[i] < ks[i]) {
        ++omit[i];
        break;
      }
      omit[i] = 0;
    }
    if (i == ks.size()) break;
  }
  Fan f = make_fan_reduced(rank, cones);
  // reconstruct the (factor, label) tags from the canonical ray order:
  // label 0 is the negative block ray, labels 1..k the unit rays
  f.labels.assign(f.rays.size(), {0, 0});
  for (std::size_t r = 0; r < f.rays.size(); ++r) {
    const Vec& v = f.rays[r];
    off = 0;
    bool tagged = false;
    for (std::size_t i = 0; i < ks.size() && !tagged; ++i) {
      for (std::size_t j = 0; j < ks[i]; ++j) {
        Vec e = zero_vec(rank);
        e[off + j] = 1;
        if (v == e) {
          f.labels[r] = {i, j + 1};
          tagged = true;
          break;
        }
      }
      if (!tagged) {
        Vec neg = zero_vec(rank);
        for (std::size_t j = 0; j < ks[i]; ++j) neg[off + j] = -1;
        if (v == neg) {
          f.labels[r] = {i, 0};
          tagged = true;
        }
      }
      off += ks[i];
    }
    if (!tagged)
      throw input_error("product_projective_fan: ray labeling failed");
  }
  return f;
}

// Σ̄: the fan in the quotient lattice by Σ's own minimal cone.
inline Fan quotient_fan(const Fan& f) {
  Fan q;
  q.ambient = f.reduced;
  q.qm = quotient_by({}, f.reduced);
  q.reduced = f.reduced;
  q.rays = f.rays;
  q.cones = f.cones;
  validate_fan(q);
  return q;
}

// Preimage fan under a lattice-surjective projection (base fan honest).
inline Fan pullback_fan(const Fan& base, const Mat& proj) {
  if (!base.lin.empty())
    throw input_error("pullback_fan: base fan must have zero minimal cone");
  if (proj.size() != base.ambient)
    throw input_error("pullback_fan: projection rank mismatch");
  std::size_t n = proj.empty() ? 0 : proj[0].size();
  Mat lin = integer_kernel(proj);
  std::vector<Mat> cones;
  for (const auto& cone : base.cones) {
    Mat gens;
    for (std::size_t r : cone) {
      auto lift = solve_integral(proj, base.rays[r]);
      if (!lift)
        throw input_error("pullback_fan: projection not lattice-surjective");
      gens.push_back(*lift);
    }
    for (const Vec& l : lin) {
      gens.push_back(l);
      gens.push_back(vec_neg(l));
    }
    cones.push_back(std::move(gens));
  }
  return make_fan(n, lin, cones);
}

// ---------------------------------------------------------------------------
// Divisors

inline ToricDivisor make_divisor(
    const Fan& f, const std::vector<std::pair<Vec, Int>>& coeffs) {
  ToricDivisor d;
  d.a = zero_vec(f.rays.size());
  for (const auto& [ray, c] : coeffs) {
    bool found = false;
    for (std::size_t r = 0; r < f.rays.size(); ++r)
      if (f.rays[r] == ray) {
        d.a[r] = c;
        found = true;
        break;
      }
    if (!found) throw input_error("make_divisor: unknown ray " + str(ray));
  }
  return d;
}

// Vertex candidate of P_D on a smooth maximal cone: <m, v_i> = -a_i.
inline QVec section_vertex(const Fan& f, std::size_t ci,
                           const ToricDivisor& d) {
  Mat rows;
  QVec rhs;
  for (std::size_t r : f.cones[ci]) {
    rows.push_back(f.rays[r]);
    rhs.push_back(Rat(-d.a[r]));
  }
  auto m = solve_rational(rows, rhs);
  if (!m) throw input_error("section_vertex: cone not simplicial/full-dim");
  return *m;
}

inline bool is_nef(const Fan& f, const ToricDivisor& d) {
  if (d.a.size() != f.rays.size())
    throw input_error("is_nef: coefficient count mismatch");
  if (!is_smooth_fan(f) || !is_complete_fan(f))
    throw input_error("is_nef: fan must be smooth and complete");
  std::vector<QVec> msigma;
  for (std::size_t ci = 0; ci < f.cones.size(); ++ci)
    msigma.push_back(section_vertex(f, ci, d));
  // wall convexity: for each shared facet, each side's vertex candidate
  // satisfies the other side's extra ray inequality
  std::map<std::vector<std::size_t>, std::vector<std::size_t>> walls;
  for (std::size_t ci = 0; ci < f.cones.size(); ++ci)
    for (std::size_t drop = 0; drop < f.cones[ci].size(); ++drop) {
      std::vector<std::size_t> key;
      for (std::size_t k = 0; k < f.cones[ci].size(); ++k)
        if (k != drop) key.push_back(f.cones[ci][k]);
      walls[key].push_back(ci);
    }
  for (const auto& [key, owners] : walls) {
    if (owners.size() != 2)
      throw input_error("is_nef: wall pairing failed on a complete fan");
    for (int side = 0; side < 2; ++side) {
      std::size_t self = owners[side], other = owners[1 - side];
      for (std::size_t r : f.cones[other]) {
        if (std::binary_search(key.begin(), key.end(), r)) continue;
        if (dot(f.rays[r], msigma[self]) < Rat(-d.a[r])) return false;
      }
    }
  }
  return true;
}

// P_D = {m : <m, v_rho> >= -a_rho}; bounded on complete fans.
inline LatticePolytope polytope_of_sections(const Fan& f,
                                            const ToricDivisor& d) {
  if (d.a.size() != f.rays.size())
    throw input_error("polytope_of_sections: coefficient count mismatch");
  Vec levels;
  for (const Int& a : d.a) levels.push_back(-a);
  return polytope_from_inequalities(f.reduced, f.rays, levels);
}

inline bool is_basepoint_free(const Fan& f, const ToricDivisor& d,
                              const Mat& a_points) {
  if (d.a.size() != f.rays.size())
    throw input_error("is_basepoint_free: coefficient count mismatch");
  if (!is_complete_fan(f))
    throw input_error("is_basepoint_free: fan must be complete");
  for (const Vec& m : a_points)
    for (std::size_t r = 0; r < f.rays.size(); ++r)
      if (dot(f.rays[r], m) < -d.a[r])
        throw input_error("is_basepoint_free: point outside the section set");
  for (const auto& cone : f.cones) {
    bool covered = false;
    for (const Vec& m : a_points) {
      bool tight = true;
      for (std::size_t r : cone) tight = tight && dot(f.rays[r], m) == -d.a[r];
      if (tight) {
        covered = true;
        break;
      }
    }
    if (!covered) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Star fans and restriction of sections

struct StarFanData {
  Fan star;
  QuotientMap qm;  // parent reduced lattice -> star lattice
  std::vector<std::size_t> parent_cones;  // per star maximal cone
  std::vector<std::size_t> ray_origin;    // per star ray: a parent ray index
};

inline bool cone_in_fan(const Fan& f, const std::vector<std::size_t>& tau) {
  if (tau.empty()) return true;
  for (const auto& cone : f.cones) {
    if (!std::includes(cone.begin(), cone.end(), tau.begin(), tau.end()))
      continue;
    if (detail::is_face_of_cone(f, cone, tau)) return true;
  }
  return false;
}

inline StarFanData star_fan_data(const Fan& f,
                                 const std::vector<std::size_t>& tau) {
  std::vector<std::size_t> t = tau;
  std::sort(t.begin(), t.end());
  if (!cone_in_fan(f, t)) throw input_error("star_fan: cone not in fan");
  StarFanData out;
  if (t.empty()) {
    out.star = f;
    out.qm = quotient_by({}, f.reduced);
    for (std::size_t ci = 0; ci < f.cones.size(); ++ci)
      out.parent_cones.push_back(ci);
    for (std::size_t r = 0; r < f.rays.size(); ++r)
      out.ray_origin.push_back(r);
    return out;
  }
  Mat span;
  for (std::size_t r : t) span.push_back(f.rays[r]);
  Mat lin = saturate_rows(span);
  out.qm = quotient_by(lin, f.reduced);
  std::size_t q2 = f.reduced - lin.size();

  std::vector<Mat> cones;
  std::vector<std::vector<std::size_t>> cone_parent_rays;
  for (std::size_t ci = 0; ci < f.cones.size(); ++ci) {
    const auto& cone = f.cones[ci];
    if (!std::includes(cone.begin(), cone.end(), t.begin(), t.end())) continue;
    Mat gens;
    std::vector<std::size_t> origins;
    for (std::size_t r : cone) {
      Vec img = mat_vec(out.qm.proj, f.rays[r]);
      if (is_zero(img)) continue;
      gens.push_back(img);
      origins.push_back(r);
    }
    cones.push_back(std::move(gens));
    cone_parent_rays.push_back(std::move(origins));
    out.parent_cones.push_back(ci);
  }
  if (cones.empty()) throw input_error("star_fan: no cone contains tau");
  out.star = make_fan(q2, {}, cones);

  out.ray_origin.assign(out.star.rays.size(), std::size_t(-1));
  for (std::size_t k = 0; k < cone_parent_rays.size(); ++k)
    for (std::size_t r : cone_parent_rays[k]) {
      Vec img = mat_vec(out.qm.proj, f.rays[r]);
      for (std::size_t sr = 0; sr < out.star.rays.size(); ++sr) {
        if (out.star.rays[sr] != img) continue;
        if (out.ray_origin[sr] != std::size_t(-1) &&
            out.ray_origin[sr] != r) {
          // two parent rays with one image would make restriction ambiguous
          if (f.rays[out.ray_origin[sr]] != f.rays[r])
            throw input_error("star_fan: ambiguous ray image");
        }
        out.ray_origin[sr] = r;
      }
    }
  return out;
}

inline Fan star_fan(const Fan& f, const std::vector<std::size_t>& tau) {
  return star_fan_data(f, tau).star;
}

struct RestrictedSections {
  Mat points;   // surviving sections, in the stratum's dual lattice
  Fan star;     // star_fan(Y, tau)
  ToricDivisor induced;
  Vec base_point;  // the chosen m0, in the parent dual lattice
};

inline RestrictedSections restricted_sections(
    const Fan& f, const ToricDivisor& d, const std::vector<std::size_t>& tau) {
  if (d.a.size() != f.rays.size())
    throw input_error("restricted_sections: coefficient count mismatch");
  std::vector<std::size_t> t = tau;
  std::sort(t.begin(), t.end());
  StarFanData sd = star_fan_data(f, t);

  Mat sections;
  try {
    sections = lattice_points(polytope_of_sections(f, d));
  } catch (const input_error& e) {
    if (std::string(e.what()).find("Empty") == std::string::npos) throw;
  }
  Mat face_pts;
  for (const Vec& m : sections) {
    bool tight = true;
    for (std::size_t r : t) tight = tight && dot(f.rays[r], m) == -d.a[r];
    if (tight) face_pts.push_back(m);
  }

  Vec m0;
  if (t.empty()) {
    m0 = zero_vec(f.reduced);
  } else if (!face_pts.empty()) {
    m0 = face_pts[0];
  } else {
    Mat rows;
    Vec rhs;
    for (std::size_t r : t) {
      rows.push_back(f.rays[r]);
      rhs.push_back(-d.a[r]);
    }
    auto sol = solve_integral(rows, rhs);
    if (!sol)
      throw input_error("restricted_sections: no integral linearization");
    m0 = *sol;
  }

  RestrictedSections out;
  out.star = sd.star;
  out.base_point = m0;
  out.induced.a = zero_vec(sd.star.rays.size());
  for (std::size_t sr = 0; sr < sd.star.rays.size(); ++sr) {
    std::size_t r = sd.ray_origin[sr];
    Vec img = mat_vec(sd.qm.proj, f.rays[r]);
    if (img != sd.star.rays[sr])
      throw input_error(
          "restricted_sections: non-primitive ray image (non-smooth "
          "context)");
    out.induced.a[sr] = d.a[r] + dot(m0, f.rays[r]);
  }
  for (const Vec& m : face_pts)
    out.points.push_back(mat_vec(sd.qm.lift, vec_sub(m, m0)));
  std::sort(out.points.begin(), out.points.end());
  return out;
}

// ---------------------------------------------------------------------------
// Isomorphism search for smooth complete honest fans

inline std::optional<Mat> find_fan_isomorphism(const Fan& a, const Fan& b) {
  if (a.reduced != b.reduced || a.rays.size() != b.rays.size() ||
      a.cones.size() != b.cones.size())
    return std::nullopt;
  if (!a.lin.empty() || !b.lin.empty())
    throw input_error("find_fan_isomorphism: fans must have zero minimal cone");
  if (a.cones.empty()) return identity_matrix(a.reduced);
  std::size_t q = a.reduced;
  Mat ra;  // rays of a's first maximal cone, as rows
  for (std::size_t r : a.cones[0]) ra.push_back(a.rays[r]);
  if (ra.size() != q) return std::nullopt;
  auto ra_inv = inverse_rational(ra);
  if (!ra_inv) return std::nullopt;

  auto check_map = [&](const Mat& u) -> bool {
    if (!is_unimodular_matrix(u)) return false;
    std::vector<std::size_t> image_index(a.rays.size());
    for (std::size_t r = 0; r < a.rays.size(); ++r) {
      Vec img = mat_vec(u, a.rays[r]);
      auto it = std::lower_bound(b.rays.begin(), b.rays.end(), img);
      if (it == b.rays.end() || *it != img) return false;
      image_index[r] = std::size_t(it - b.rays.begin());
    }
    std::vector<std::vector<std::size_t>> mapped;
    for (const auto& cone : a.cones) {
      std::vector<std::size_t> img;
      for (std::size_t r : cone) img.push_back(image_index[r]);
      std::sort(img.begin(), img.end());
      mapped.push_back(std::move(img));
    }
    std::sort(mapped.begin(), mapped.end());
    return mapped == b.cones;
  };

  std::vector<std::size_t> perm(q);
  for (const auto& cone : b.cones) {
    if (cone.size() != q) continue;
    std::vector<std::size_t> order(cone.begin(), cone.end());
    std::sort(order.begin(), order.end());
    do {
      // u maps ra rows to the chosen ordering of b's cone rays:
      // u = rb^T * (ra^T)^{-1}, built rationally then integrality-checked
      QMat rbq;
      for (std::size_t k = 0; k < q; ++k) rbq.push_back(to_q(b.rays[order[k]]));
      // solve u * ra_row_k = rb_row_k for all k: u = (ra^{-1})^T acting...
      // compute u^T = ra^{-1} * rb
      QMat ut(q, zero_qvec(q));
      for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = 0; j < q; ++j)
          for (std::size_t k = 0; k < q; ++k)
            ut[i][j] += (*ra_inv)[i][k] * rbq[k][j];
      Mat u(q, zero_vec(q));
      bool integral = true;
      for (std::size_t i = 0; i < q && integral; ++i)
        for (std::size_t j = 0; j < q && integral; ++j) {
          if (!is_integral(ut[j][i])) {
            integral = false;
            break;
          }
          u[i][j] = to_int(ut[j][i]);
        }
      if (integral && check_map(u)) return u;
    } while (std::next_permutation(order.begin(), order.end()));
  }
  return std::nullopt;
}

}  // namespace cracklat
