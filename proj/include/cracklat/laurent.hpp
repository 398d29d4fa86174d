#pragma once

// From a scaffolding of P this module builds the ambient picture: a lattice
// of rank (#struts' shape rays + lineality rank), a polytope Q cut out there
// by the strut data, its normal fan, and a dual pair of lattice maps theta
// and iota along which the polar polytope embeds piecewise-linearly into Q.
// Smoothness of the ambient space at the embedded torus-fixed points is then
// equivalent to the polar polytope being cracked along a fan the scaffolding
// is full for, and both sides of that equivalence are computed independently.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cracklat/cracked.hpp"
#include "cracklat/scaffolding.hpp"

namespace cracklat {

struct AmbientModel {
  Scaffolding scaf;       // the validated scaffolding of P
  LatticePolytope polar;  // polar dual of the target polytope
  std::size_t ell = 0;    // number of shape rays (divisor coordinates)
  std::size_t n_u = 0;    // rank of the lineality summand
  std::size_t pic_rank = 0;  // corank of theta in the ambient lattice

  Mat rho;             // one row per strut: (-coefficients, offset)
  LatticePolytope q;   // ambient polytope, rank ell + n_u
  Fan sigma;           // its normal fan
  Mat theta;           // (ell + n_u) x n; acts on column vectors by mat_vec

  std::vector<Mat> iota_maps;  // one linear lift per shape maximal cone
  std::vector<LatticePolytope> pieces;  // polar ∩ (cone preimage), cone order
  QMat iota_verts;                   // image of each polar vertex
  std::vector<RationalCone> tangent;  // tangent cone of q at each image
};

namespace detail {

// The vertex of Q cut out by the torus fixed point of maximal cone `ci`
// and the strut `si`, expressed back in N: the unique lattice point where
// the strut's section polytope meets the fixed point's chart.
inline Vec fixed_point_image(const Scaffolding& s, std::size_t ci,
                             std::size_t si) {
  const std::vector<std::size_t>& cone = s.shape.cones[ci];
  Mat rays;
  Vec rhs;
  for (std::size_t r : cone) {
    rays.push_back(s.shape.rays[r]);
    rhs.push_back(-s.struts[si].divisor.a[r]);
  }
  Vec xi = mat_vec(unimodular_inverse(rays), rhs);
  return s.split.compose_n(xi, s.struts[si].chi);
}

// Image of a point of the polar polytope under every admissible linear
// lift, checked for agreement on overlaps.
inline QVec iota_point(const AmbientModel& m, const QVec& p,
                       const std::string& who) {
  if (!m.polar.contains(p))
    throw input_error(who + ": point " + str(p) +
                      " is not in the polar polytope");
  std::optional<QVec> out;
  for (std::size_t ci = 0; ci < m.scaf.shape.cones.size(); ++ci) {
    QVec img = mat_vec(m.iota_maps[ci], p);
    bool member = true;
    for (std::size_t i = 0; member && i < m.ell; ++i)
      member = !(img[i] < Rat(0));
    if (!member) continue;
    if (out && *out != img)
      throw input_error(who + ": lifts disagree on a cone overlap at " +
                        str(p));
    if (!out) out = img;
  }
  if (!out)
    throw input_error(who + ": no maximal cone contains " + str(p));
  return *out;
}

}  // namespace detail

inline AmbientModel build_ambient(const Scaffolding& s_in) {
  AmbientModel m;
  m.scaf = validate_scaffolding(s_in);
  const Scaffolding& s = m.scaf;
  if (!origin_interior(s.p))
    throw input_error(
        "build_ambient: target polytope must contain the origin in its "
        "interior");
  m.polar = polar_dual(s.p);
  m.ell = s.shape.rays.size();
  m.n_u = s.split.nu_rank();
  const std::size_t n = s.p.ambient;
  const std::size_t dim = m.ell + m.n_u;

  // Ambient polytope: divisor coordinates are nonnegative and each strut
  // contributes one inequality at level -1.
  Mat normals;
  Vec levels;
  for (std::size_t i = 0; i < m.ell; ++i) {
    Vec e = zero_vec(dim);
    e[i] = 1;
    normals.push_back(e);
    levels.push_back(0);
  }
  for (const Strut& st : s.struts) {
    Vec r = zero_vec(dim);
    for (std::size_t i = 0; i < m.ell; ++i) r[i] = -st.divisor.a[i];
    for (std::size_t j = 0; j < m.n_u; ++j) r[m.ell + j] = st.chi[j];
    m.rho.push_back(r);
    normals.push_back(r);
    levels.push_back(-1);
  }
  try {
    m.q = polytope_from_inequalities(dim, normals, levels);
  } catch (const input_error& e) {
    throw input_error(std::string("build_ambient: invalid scaffolding data (") +
                      e.what() + ")");
  }
  if (!m.q.full_dim())
    throw input_error(
        "build_ambient: invalid scaffolding data (ambient polytope is not "
        "full-dimensional)");
  m.sigma = normal_fan(m.q);

  // theta: divisor rows pair shape rays with the Nbar coordinates, the
  // remaining rows read off the lineality coordinates.
  for (const Vec& ray : s.shape.rays)
    m.theta.push_back(mat_vec(transpose(s.split.mbar), ray));
  for (const Vec& mu : s.split.mu) m.theta.push_back(mu);
  SnfResult sn = smith_normal_form(m.theta);
  if (sn.divisors.size() != n ||
      std::any_of(sn.divisors.begin(), sn.divisors.end(),
                  [](const Int& d) { return d != 1; }))
    throw theorem_violation(
        "build_ambient: theta does not embed the cocharacter lattice as a "
        "saturated sublattice");
  m.pic_rank = dim - n;

  // One linear lift per torus fixed point, and the piece of the polar
  // polytope it is responsible for.
  for (std::size_t ci = 0; ci < s.shape.cones.size(); ++ci) {
    const std::vector<std::size_t>& cone = s.shape.cones[ci];
    Mat rays;
    for (std::size_t r : cone) rays.push_back(s.shape.rays[r]);
    Mat w = transpose(unimodular_inverse(rays));
    Mat lift(dim, zero_vec(n));
    for (std::size_t j = 0; j < cone.size(); ++j)
      lift[cone[j]] = mat_vec(transpose(s.split.nbar), w[j]);
    for (std::size_t j = 0; j < m.n_u; ++j) lift[m.ell + j] = s.split.nu[j];
    m.iota_maps.push_back(lift);

    Mat cuts;
    ConeHRep hr = cone_hrep(fan_cone(s.shape, ci));
    for (const Vec& g : hr.facets)
      cuts.push_back(mat_vec(transpose(s.split.nbar), g));
    m.pieces.push_back(
        intersect_with_halfspaces(m.polar, cuts, zero_vec(cuts.size())));
  }

  // Image of every polar vertex together with the honest tangent cone of
  // the ambient polytope there.  The image always lies in the relative
  // interior of its minimal face, so relocating the apex is harmless.
  for (const QVec& v : m.polar.verts) {
    QVec iv = detail::iota_point(m, v, "build_ambient");
    Face f = minimal_face_containing(m.q, iv);
    RationalCone tc = tangent_cone(m.q, f);
    tc.apex = iv;
    m.iota_verts.push_back(iv);
    m.tangent.push_back(tc);
  }
  return m;
}

// Piecewise-linear embedding of the polar polytope into the ambient one.
inline QVec iota(const AmbientModel& m, const QVec& p) {
  return detail::iota_point(m, p, "iota");
}

// The linear lift attached to one torus fixed point of the shape.
inline const Mat& iota_map(const AmbientModel& m, std::size_t u) {
  if (u >= m.iota_maps.size())
    throw input_error("iota_map: fixed point index out of range");
  return m.iota_maps[u];
}

// Tangent cone of the ambient polytope at the image of a polar vertex,
// computed directly from the face structure and cross-checked against the
// inequality description predicted by the scaffolding: the struts whose
// section polytope meets the dual facet of v, at level -1, and the divisor
// coordinates missed by some maximal cone whose piece contains v, at 0.
inline RationalCone tangent_cone_ambient(const AmbientModel& m,
                                         std::size_t vi) {
  if (vi >= m.polar.verts.size())
    throw input_error("tangent_cone_ambient: vertex index out of range");
  const QVec& v = m.polar.verts[vi];
  const QVec& iv = m.iota_verts[vi];
  const std::size_t dim = m.ell + m.n_u;

  Mat predicted;
  for (std::size_t si = 0; si < m.scaf.struts.size(); ++si) {
    LatticePolytope foot = strut_polytope(m.scaf, si);
    Rat lo(1);
    for (const QVec& fv : foot.verts) lo = std::min(lo, dot(fv, v));
    if (lo != Rat(-1)) continue;
    if (dot(m.rho[si], iv) != Rat(-1))
      throw theorem_violation(
          "tangent_cone_ambient: predicted strut inequality is not tight at "
          "the image of vertex " +
          str(v));
    predicted.push_back(m.rho[si]);
  }
  for (std::size_t i = 0; i < m.ell; ++i) {
    bool missed = false;
    for (std::size_t ci = 0; !missed && ci < m.scaf.shape.cones.size(); ++ci) {
      const std::vector<std::size_t>& cone = m.scaf.shape.cones[ci];
      QVec img = mat_vec(m.iota_maps[ci], v);
      bool member = true;
      for (std::size_t k = 0; member && k < m.ell; ++k)
        member = !(img[k] < Rat(0));
      missed = member &&
               std::find(cone.begin(), cone.end(), i) == cone.end();
    }
    if (!missed) continue;
    if (iv[i] != Rat(0))
      throw theorem_violation(
          "tangent_cone_ambient: predicted coordinate inequality is not "
          "tight at the image of vertex " +
          str(v));
    Vec e = zero_vec(dim);
    e[i] = 1;
    predicted.push_back(e);
  }

  // The direct cone must satisfy every predicted inequality, and every
  // valid inequality of the direct cone must be positively spanned by the
  // predicted ones; together these force equality of the two cones.
  const RationalCone& direct = m.tangent[vi];
  for (const Vec& g : direct.gens)
    for (const Vec& row : predicted)
      if (dot(row, g) < 0)
        throw theorem_violation(
            "tangent_cone_ambient: direct tangent cone escapes the "
            "predicted inequalities at the image of vertex " +
            str(v));
  ConeHRep ph = cone_hrep(make_cone(dim, predicted));
  auto spanned = [&](const Vec& y) {
    for (const Vec& f : ph.facets)
      if (dot(f, y) < 0) return false;
    for (const Vec& e : ph.equations)
      if (dot(e, y) != 0) return false;
    return true;
  };
  ConeHRep dh = cone_hrep(direct);
  std::vector<Vec> valid = dh.facets;
  for (const Vec& e : dh.equations) {
    valid.push_back(e);
    valid.push_back(vec_scale(-1, e));
  }
  for (const Vec& y : valid)
    if (!spanned(y))
      throw theorem_violation(
          "tangent_cone_ambient: predicted inequalities miss a facet of the "
          "direct tangent cone at the image of vertex " +
          str(v));
  return direct;
}

struct SmoothAmbientReport {
  bool smooth = false;
  std::vector<std::size_t> non_unimodular;  // polar vertex indices
  CrackReport cracked;  // certificate for the polar polytope along the fan
  bool full = false;
  FullnessReport fullness;
};

// The ambient space is smooth at every embedded fixed point exactly when
// the polar polytope is cracked along the fan and the scaffolding is full.
// Both sides are computed independently and must agree.
inline SmoothAmbientReport is_smooth_ambient(const AmbientModel& m,
                                             const Fan& f) {
  if (m.scaf.p.ambient != f.ambient)
    throw input_error("is_smooth_ambient: polytope and fan lattices differ");
  if (!(shape_fan(f) == m.scaf.shape) || m.scaf.split.nbar != f.qm.proj)
    throw input_error(
        "is_smooth_ambient: fan is not compatible with the scaffolding");

  SmoothAmbientReport rep;
  const std::size_t dim = m.ell + m.n_u;
  for (std::size_t vi = 0; vi < m.polar.verts.size(); ++vi) {
    Mat active;
    for (std::size_t fi = 0; fi < m.q.fnormals.size(); ++fi)
      if (dot(m.q.fnormals[fi], m.iota_verts[vi]) == Rat(m.q.flevels[fi]))
        active.push_back(m.q.fnormals[fi]);
    if (!is_unimodular_cone(make_cone(dim, active)))
      rep.non_unimodular.push_back(vi);
  }
  const bool charts_smooth = rep.non_unimodular.empty();

  rep.cracked = is_cracked(m.polar, f);
  if (rep.cracked.verdict || is_cracked(m.scaf.p, f).verdict)
    rep.full = is_full(m.scaf, f, &rep.fullness);
  const bool criterion = rep.cracked.verdict && rep.full;

  if (charts_smooth != criterion)
    throw theorem_violation(
        "TheoremViolation: ambient chart smoothness disagrees with the "
        "cracked-and-full criterion");
  rep.smooth = charts_smooth;
  return rep;
}

struct EmbeddingReport {
  std::vector<Face> piece_faces;     // face of q matching each piece image
  std::size_t splitting_checks = 0;  // fixed points with theta* lift == id
  std::size_t strut_identities = 0;  // strut functionals matching vertices
  std::size_t cone_equalities = 0;   // vertices with matching tangent image
  std::size_t monoid_samples = 0;    // directions with integral preimages
};

// Certifies the embedding: each piece of the polar polytope maps onto a
// face of the ambient polytope, the lifts split theta integrally, strut
// functionals pull back to the fixed-point vertices, theta* carries each
// ambient tangent cone back onto the polar one, and every small lattice
// direction of a polar tangent cone has an integral ambient preimage.
inline EmbeddingReport verify_embedding(const AmbientModel& m) {
  EmbeddingReport rep;
  const std::size_t n = m.scaf.p.ambient;
  const std::size_t dim = m.ell + m.n_u;
  const Mat theta_t = transpose(m.theta);

  for (std::size_t ci = 0; ci < m.scaf.shape.cones.size(); ++ci) {
    QMat img;
    for (const QVec& pv : m.pieces[ci].verts) {
      QVec via_map = mat_vec(m.iota_maps[ci], pv);
      if (via_map != detail::iota_point(m, pv, "verify_embedding"))
        throw input_error(
            "verify_embedding: lift of fixed point " + std::to_string(ci) +
            " disagrees with the glued embedding at " + str(pv));
      img.push_back(via_map);
    }
    QMat want = polytope_from_points(dim, img).verts;
    bool matched = false;
    for (const Face& f : face_lattice(m.q).faces) {
      if (f.verts.empty()) continue;
      QMat got;
      for (std::size_t qi : f.verts) got.push_back(m.q.verts[qi]);
      std::sort(got.begin(), got.end());
      if (got == want) {
        rep.piece_faces.push_back(f);
        matched = true;
        break;
      }
    }
    if (!matched)
      throw input_error("verify_embedding: image of piece " +
                        std::to_string(ci) +
                        " is not a face of the ambient polytope");

    if (mat_mul(theta_t, m.iota_maps[ci]) != identity_matrix(n))
      throw input_error(
          "verify_embedding: lift of fixed point " + std::to_string(ci) +
          " is not an integral splitting of theta");
    ++rep.splitting_checks;

    Mat lift_t = transpose(m.iota_maps[ci]);
    for (std::size_t si = 0; si < m.scaf.struts.size(); ++si) {
      if (mat_vec(lift_t, m.rho[si]) !=
          detail::fixed_point_image(m.scaf, ci, si))
        throw input_error("verify_embedding: strut " + std::to_string(si) +
                          " does not pull back to the vertex of fixed point " +
                          std::to_string(ci));
      ++rep.strut_identities;
    }
  }

  for (std::size_t vi = 0; vi < m.polar.verts.size(); ++vi) {
    const QVec& v = m.polar.verts[vi];
    const QVec& iv = m.iota_verts[vi];
    Mat tight_polar;
    for (std::size_t fi = 0; fi < m.polar.fnormals.size(); ++fi)
      if (dot(m.polar.fnormals[fi], v) == Rat(m.polar.flevels[fi]))
        tight_polar.push_back(m.polar.fnormals[fi]);

    // theta* maps the ambient tangent cone into the polar one ...
    for (const QVec& qv : m.q.verts) {
      QVec d = mat_vec(theta_t, qvec_sub(qv, iv));
      for (const Vec& tn : tight_polar)
        if (dot(tn, d) < Rat(0))
          throw input_error(
              "verify_embedding: theta* leaves the tangent cone of the "
              "polar polytope at " +
              str(v));
    }
    // ... and back onto it, since it restores every edge direction.
    for (std::size_t vj = 0; vj < m.polar.verts.size(); ++vj) {
      QVec back = mat_vec(theta_t, qvec_sub(m.iota_verts[vj], iv));
      if (back != qvec_sub(m.polar.verts[vj], v))
        throw input_error(
            "verify_embedding: theta* does not restore the direction from " +
            str(v) + " to " + str(m.polar.verts[vj]));
    }
    ++rep.cone_equalities;

    // Bounded monoid check: every lattice direction of the polar tangent
    // cone in a small box admits an integral lift into the ambient one.
    Mat tight_q;
    for (std::size_t fi = 0; fi < m.q.fnormals.size(); ++fi)
      if (dot(m.q.fnormals[fi], iv) == Rat(m.q.flevels[fi]))
        tight_q.push_back(m.q.fnormals[fi]);
    std::vector<std::size_t> holds;
    for (std::size_t ci = 0; ci < m.scaf.shape.cones.size(); ++ci) {
      QVec img = mat_vec(m.iota_maps[ci], v);
      bool member = true;
      for (std::size_t i = 0; member && i < m.ell; ++i)
        member = !(img[i] < Rat(0));
      if (member) holds.push_back(ci);
    }
    Vec d(n, -2);
    while (true) {
      bool in_cone = !is_zero(d);
      for (std::size_t fi = 0; in_cone && fi < tight_polar.size(); ++fi)
        in_cone = dot(tight_polar[fi], d) >= 0;
      if (in_cone) {
        bool found = false;
        for (std::size_t ci : holds) {
          Vec x = mat_vec(m.iota_maps[ci], d);
          bool ok = true;
          for (std::size_t fi = 0; ok && fi < tight_q.size(); ++fi)
            ok = dot(tight_q[fi], x) >= 0;
          if (ok) {
            found = true;
            break;
          }
        }
        if (!found)
          throw input_error(
              "verify_embedding: tangent direction " + str(d) + " at " +
              str(v) + " has no integral lift");
        ++rep.monoid_samples;
      }
      std::size_t k = 0;
      while (k < n && d[k] == 2) d[k++] = -2;
      if (k == n) break;
      ++d[k];
    }
  }
  return rep;
}

}  // namespace cracklat
