#pragma once

// Crackedness of a polytope along a fan, and the Cayley-type structure this
// imposes on the facets of the polar polytope.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "cracklat/fan.hpp"
#include "cracklat/polytope.hpp"

namespace cracklat {

struct CrackFailure {
  std::size_t cone = 0;  // maximal-cone index in the fan
  QVec vertex;           // piece vertex whose tangent cone obstructs
  std::string reason;
};

struct CrackReport {
  bool verdict = false;
  std::vector<LatticePolytope> pieces;  // P ∩ C per maximal cone, fan order
  std::optional<CrackFailure> failure;
};

// P is cracked along Σ when every piece P ∩ C (C maximal) has unimodular
// tangent cones; checking the vertices of each piece suffices.
inline CrackReport is_cracked(const LatticePolytope& p, const Fan& f) {
  if (p.ambient != f.ambient)
    throw input_error("is_cracked: polytope and fan lattices differ");
  if (!origin_interior(p))
    throw input_error("is_cracked: origin must be interior");
  if (!is_smooth_fan(f)) throw input_error("is_cracked: fan is not unimodular");

  CrackReport rep;
  for (std::size_t ci = 0; ci < f.cones.size(); ++ci) {
    Mat normals = fan_cone_ambient_normals(f, ci);
    rep.pieces.push_back(
        intersect_with_halfspaces(p, normals, zero_vec(normals.size())));
  }
  for (std::size_t ci = 0; ci < rep.pieces.size() && !rep.failure; ++ci) {
    const LatticePolytope& piece = rep.pieces[ci];
    if (piece.dim < p.dim) continue;  // measure-zero overlap
    for (std::size_t vi = 0; vi < piece.verts.size(); ++vi) {
      if (!is_integral(piece.verts[vi])) {
        rep.failure = CrackFailure{ci, piece.verts[vi], "rational vertex"};
        break;
      }
      RationalCone tc = tangent_cone(piece, vertex_face(piece, vi));
      if (!is_unimodular_cone(tc)) {
        rep.failure =
            CrackFailure{ci, piece.verts[vi], "non-unimodular tangent cone"};
        break;
      }
    }
  }
  rep.verdict = !rep.failure.has_value();
  return rep;
}

struct CayleyFacetStructure {
  Face facet;
  std::vector<std::size_t> cone;  // ray indices of the minimal cone over F*
  std::size_t k = 0;              // its dimension, lineality included
  Mat pi;   // k x n; x -> pi*x maps the facet onto the standard simplex
  Fan star;                             // fan of the stratum Z_C
  std::vector<LatticePolytope> fibers;  // in the character lattice of Z_C
  std::vector<ToricDivisor> fiber_divisors;  // nef divisors cutting the fibers
  AffineIso cayley_iso;                      // cayley_sum(fibers) -> facet
};

namespace detail {

// Minimal cone of the fan containing x, as a sorted list of ray indices in
// the reduced picture (the lineality part is implicit).
inline std::vector<std::size_t> minimal_cone_containing(const Fan& f,
                                                        const Vec& x) {
  Vec xb = mat_vec(f.qm.proj, x);
  if (is_zero(xb)) return {};
  for (std::size_t ci = 0; ci < f.cones.size(); ++ci) {
    ConeHRep h = cone_hrep(fan_cone(f, ci));
    bool inside = true;
    for (const Vec& e : h.equations) inside = inside && dot(e, xb) == 0;
    Mat tight;
    for (const Vec& g : h.facets) {
      Int val = dot(g, xb);
      if (val < 0) inside = false;
      if (val == 0) tight.push_back(g);
      if (!inside) break;
    }
    if (!inside) continue;
    std::vector<std::size_t> tau;
    for (std::size_t r : f.cones[ci]) {
      bool on = true;
      for (const Vec& g : tight) on = on && dot(g, f.rays[r]) == 0;
      if (on) tau.push_back(r);
    }
    std::sort(tau.begin(), tau.end());
    return tau;
  }
  throw input_error("minimal_cone_containing: point outside the fan support");
}

}  // namespace detail

// Cayley-type decomposition of a facet of P, assuming P° is cracked along
// the fan and the reduced fan is smooth and complete.
inline CayleyFacetStructure facet_cayley_structure(const LatticePolytope& p,
                                                   const Fan& f,
                                                   const Face& facet) {
  if (p.ambient != f.ambient)
    throw input_error("facet_cayley_structure: polytope and fan differ");
  if (facet.dim < 0 || facet.dim + 1 != p.dim)
    throw input_error("facet_cayley_structure: face is not a facet");
  if (!is_smooth_fan(f) || !is_complete_fan(f))
    throw input_error(
        "facet_cayley_structure: shape fan must be smooth and complete");
  LatticePolytope polar = polar_dual(p);
  if (!is_lattice_polytope(polar))
    throw input_error("facet_cayley_structure: polytope not reflexive");

  CayleyFacetStructure out;
  out.facet = facet;
  Face dual = dual_face(p, polar, facet);
  Vec v = to_int(polar.verts[dual.verts[0]]);
  out.cone = detail::minimal_cone_containing(f, v);
  out.k = out.cone.size() + f.lin.size();

  // span of the minimal cone in ambient coordinates
  Mat span = f.lin;
  Mat lift_t = transpose(f.qm.lift);
  for (std::size_t r : out.cone) span.push_back(mat_vec(lift_t, f.rays[r]));
  Mat ann = integer_kernel(span);

  // b_i: generators of (tangent cone of P° at v) ∩ ⟨C⟩
  RationalCone cv = tangent_cone(polar, dual);
  Mat rows = cone_hrep(cv).facets;
  for (const Vec& e : ann) {
    rows.push_back(e);
    rows.push_back(vec_neg(e));
  }
  Mat b = detail::dd_rays(rows);
  if (b.size() != out.k)
    throw input_error(
        "facet_cayley_structure: no Cayley structure (tangent slice not "
        "simplicial at " +
        str(v) + ")");
  if (!is_unimodular_cone(make_cone(p.ambient, b)))
    throw input_error(
        "facet_cayley_structure: no Cayley structure (tangent slice not "
        "unimodular at " +
        str(v) + ")");
  std::sort(b.begin(), b.end());
  Vec sum = zero_vec(p.ambient);
  for (const Vec& bi : b) sum = vec_add(sum, bi);
  if (sum != vec_neg(v))
    throw input_error(
        "facet_cayley_structure: no Cayley structure (Gorenstein direction "
        "mismatch at " +
        str(v) + ")");
  out.pi = b;

  // stratum fan and the identification of its character lattice
  StarFanData sd = star_fan_data(f, out.cone);
  out.star = sd.star;
  Mat comp_proj = mat_mul(sd.qm.proj, f.qm.proj);
  Mat comp_lift = mat_mul(sd.qm.lift, f.qm.lift);
  std::size_t q = out.star.reduced;

  // fibers over the simplex vertices, moved into the stratum lattice
  Mat fnormals = p.fnormals;
  Vec flevels = p.flevels;
  fnormals.push_back(v);
  flevels.push_back(-1);
  fnormals.push_back(vec_neg(v));
  flevels.push_back(1);
  for (std::size_t i = 0; i < out.k; ++i) {
    Mat ns = fnormals;
    Vec ls = flevels;
    ns.push_back(b[i]);
    ls.push_back(1);
    ns.push_back(vec_neg(b[i]));
    ls.push_back(-1);
    LatticePolytope fiber;
    try {
      fiber = polytope_from_inequalities(p.ambient, ns, ls);
    } catch (const input_error& e) {
      if (std::string(e.what()).find("Empty") != std::string::npos)
        throw input_error("facet_cayley_structure: fiber " +
                          std::to_string(i) + " is empty");
      throw;
    }
    if (!is_lattice_polytope(fiber))
      throw input_error("facet_cayley_structure: fiber " + std::to_string(i) +
                        " has rational vertices");
    Vec w = to_int(fiber.verts[0]);
    QMat pts;
    for (const QVec& x : fiber.verts)
      pts.push_back(to_q(mat_vec(comp_lift, vec_sub(to_int(x), w))));
    LatticePolytope fq = polytope_from_points(q, pts);
    Vec a;
    for (const Vec& ray : out.star.rays) {
      Int m;
      bool first = true;
      for (const QVec& x : fq.verts) {
        Int val = dot(ray, to_int(x));
        if (first || val < m) m = val;
        first = false;
      }
      a.push_back(-m);
    }
    ToricDivisor d{a};
    if (!(polytope_of_sections(out.star, d) == fq))
      throw input_error("facet_cayley_structure: fiber " + std::to_string(i) +
                        " is not a divisor section polytope on the stratum");
    if (!is_nef(out.star, d))
      throw input_error("facet_cayley_structure: fiber " + std::to_string(i) +
                        " divisor is not nef on the stratum");
    out.fibers.push_back(std::move(fq));
    out.fiber_divisors.push_back(std::move(d));
  }

  LatticePolytope csum = cayley_sum(out.fibers);
  QMat fverts;
  for (std::size_t i : facet.verts) fverts.push_back(p.verts[i]);
  LatticePolytope pf = polytope_from_points(p.ambient, fverts);
  auto iso = find_affine_lattice_iso(csum, pf);
  if (!iso)
    throw input_error(
        "facet_cayley_structure: Cayley sum of the fibers is not isomorphic "
        "to the facet");
  out.cayley_iso = *iso;
  return out;
}

// Faces whose image under every facet projection π_F is a simplex vertex.
inline std::vector<Face> vertical_faces(const LatticePolytope& p,
                                        const Fan& f) {
  std::vector<Face> facets = faces_of_dim(p, int(p.dim) - 1);
  std::vector<CayleyFacetStructure> structure;
  structure.reserve(facets.size());
  for (const Face& fc : facets)
    structure.push_back(facet_cayley_structure(p, f, fc));

  std::vector<Face> out;
  for (const Face& e : face_lattice(p).faces) {
    if (e.dim < 0 || e.dim == int(p.dim)) continue;
    bool vertical = true;
    for (std::size_t fi = 0; fi < facets.size() && vertical; ++fi) {
      if (!std::includes(facets[fi].verts.begin(), facets[fi].verts.end(),
                         e.verts.begin(), e.verts.end()))
        continue;
      Vec image;
      for (std::size_t j = 0; j < e.verts.size() && vertical; ++j) {
        Vec t = mat_vec(structure[fi].pi, to_int(p.verts[e.verts[j]]));
        if (j == 0)
          image = t;
        else if (t != image)
          vertical = false;
      }
    }
    if (vertical) out.push_back(e);
  }
  return out;
}

}  // namespace cracklat
