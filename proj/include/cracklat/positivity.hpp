#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cracklat/core.hpp"
#include "cracklat/fan.hpp"
#include "cracklat/laurent.hpp"
#include "cracklat/matrix.hpp"
#include "cracklat/polytope.hpp"
#include "cracklat/scaffolding.hpp"

namespace cracklat {

// Two divisors on a fan are linearly equivalent exactly when their
// difference is the divisor of a character.
inline bool linearly_equivalent(const Fan& f, const ToricDivisor& d1,
                                const ToricDivisor& d2) {
  if (d1.a.size() != f.rays.size() || d2.a.size() != f.rays.size())
    throw input_error("linearly_equivalent: coefficient count mismatch");
  Vec diff(d1.a.size());
  for (std::size_t r = 0; r < diff.size(); ++r) diff[r] = d1.a[r] - d2.a[r];
  return solve_integral(f.rays, diff).has_value();
}

namespace detail {

// Index of v among the fan's (sorted) rays; nullopt when absent.
inline std::optional<std::size_t> ray_index(const Fan& f, const Vec& v) {
  auto it = std::lower_bound(f.rays.begin(), f.rays.end(), v);
  if (it == f.rays.end() || *it != v) return std::nullopt;
  return std::size_t(it - f.rays.begin());
}

// Shape-ray indices grouped by projective-space factor; nullopt when the
// shape is not a product of projective spaces.
inline std::optional<std::vector<std::vector<std::size_t>>> shape_factors(
    const Fan& shape) {
  auto ps = product_structure(shape);
  if (!ps) return std::nullopt;
  std::vector<std::vector<std::size_t>> factors(ps->ks.size());
  for (std::size_t r = 0; r < ps->product.rays.size(); ++r)
    factors[ps->product.labels[r].first].push_back(ps->ray_of[r]);
  for (auto& slots : factors) std::sort(slots.begin(), slots.end());
  return factors;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Complete-intersection data

// Chart-level equation data of the model at one vertex of the polar
// polytope: the struts whose inequality is active there, the divisor
// coordinates that vanish there (grouped by factor), and the exponents
// tying the two together in the chart equations.
struct LocalEquations {
  std::vector<std::size_t> active;          // strut indices with pairing -1
  std::vector<std::vector<std::size_t>> b;  // per factor: vanishing slots
  Mat exponents;  // rows: factors; columns follow `active`
};

// The embedded variety inside the ambient toric variety is cut out by one
// equation per factor of the shape: the product of a factor's coordinates
// equals a monomial in the strut variables.  This struct holds the
// per-factor functionals, the line bundles the equations live in, and the
// exponent table, plus the local data at every polar vertex.
struct CIData {
  std::vector<std::vector<std::size_t>> factors;  // per factor: shape-ray slots
  Mat h;  // per factor: functional summing that factor's slot coordinates
  std::vector<ToricDivisor> li;  // per factor: sum of its slot divisors
  Mat exponents;                 // exponents[i][s]: degree of strut s on factor i
  std::vector<std::size_t> degenerate;  // factors whose equation omits every strut
  std::vector<LocalEquations> local;    // per polar vertex, vertex order
};

inline LocalEquations local_equations(const AmbientModel& m, std::size_t vi) {
  if (vi >= m.polar.verts.size())
    throw input_error("local_equations: vertex index out of range");
  auto factors = detail::shape_factors(m.scaf.shape);
  if (!factors)
    throw input_error(
        "local_equations: Unsupported shape (not a product of projective "
        "spaces)");
  const QVec& iv = m.iota_verts[vi];
  LocalEquations out;
  for (std::size_t s = 0; s < m.rho.size(); ++s)
    if (dot(m.rho[s], iv) == Rat(-1)) out.active.push_back(s);
  out.b.resize(factors->size());
  for (std::size_t i = 0; i < factors->size(); ++i)
    for (std::size_t j : (*factors)[i])
      if (iv[j] == 0) out.b[i].push_back(j);
  // A factor's rays are positively dependent, so no chart uses all of them;
  // an empty vanishing set would make that factor's equation constant.
  for (const auto& bi : out.b)
    if (bi.empty())
      throw theorem_violation(
          "local_equations: factor with no vanishing coordinate");
  for (std::size_t i = 0; i < factors->size(); ++i) {
    Vec row;
    for (std::size_t s : out.active) {
      Int l = 0;
      for (std::size_t j : (*factors)[i]) l += -m.rho[s][j];
      row.push_back(l);
    }
    out.exponents.push_back(std::move(row));
  }
  return out;
}

inline CIData ci_data(const AmbientModel& m) {
  auto factors = detail::shape_factors(m.scaf.shape);
  if (!factors)
    throw input_error(
        "ci_data: Unsupported shape (not a product of projective spaces)");
  CIData cd;
  cd.factors = *factors;
  const std::size_t dim = m.ell + m.n_u;
  for (const auto& slots : cd.factors) {
    Vec row = zero_vec(dim);
    for (std::size_t j : slots) row[j] = 1;
    cd.h.push_back(std::move(row));
    ToricDivisor d;
    d.a = zero_vec(m.sigma.rays.size());
    for (std::size_t j : slots) {
      Vec e = zero_vec(dim);
      e[j] = 1;
      auto r = detail::ray_index(m.sigma, e);
      if (!r)
        throw input_error("ci_data: divisor coordinate " + std::to_string(j) +
                          " is not a ray of the ambient fan");
      d.a[*r] = 1;
    }
    cd.li.push_back(std::move(d));
  }
  // Exponent table: the degree of each strut divisor on each factor.  The
  // rows of rho hold the negated divisor coefficients, so degrees are the
  // negated slot sums; strut divisors are nef, so every degree is >= 0.
  for (std::size_t i = 0; i < cd.factors.size(); ++i) {
    Vec row;
    for (const Vec& rho : m.rho) {
      Int l = 0;
      for (std::size_t j : cd.factors[i]) l += -rho[j];
      if (l < 0) throw theorem_violation("ci_data: negative strut degree");
      row.push_back(l);
    }
    if (std::all_of(row.begin(), row.end(),
                    [](const Int& x) { return x == 0; }))
      cd.degenerate.push_back(i);
    cd.exponents.push_back(std::move(row));
  }
  // The embedding's image must be exactly the common kernel of the factor
  // functionals: first annihilation, then row-lattice equality.
  for (const Vec& row : mat_mul(cd.h, m.theta))
    if (!is_zero(row))
      throw theorem_violation(
          "ci_data: factor functionals do not annihilate the embedding");
  HnfResult img = hermite_normal_form(transpose(m.theta));
  HnfResult ker = hermite_normal_form(integer_kernel(cd.h));
  Mat img_basis(img.H.begin(),
                img.H.begin() + static_cast<std::ptrdiff_t>(img.rank));
  Mat ker_basis(ker.H.begin(),
                ker.H.begin() + static_cast<std::ptrdiff_t>(ker.rank));
  if (img_basis != ker_basis)
    throw theorem_violation(
        "ci_data: embedding image differs from the factor kernel");
  for (std::size_t vi = 0; vi < m.polar.verts.size(); ++vi)
    cd.local.push_back(local_equations(m, vi));
  return cd;
}

// ---------------------------------------------------------------------------
// Slabs

// One slab: the intersection of a codimension-one cone of the fan with the
// polar polytope, together with the stratum data accumulated along the
// positivity pipeline.
struct SlabRecord {
  LatticePolytope body;           // wall cone ∩ polar polytope
  std::vector<std::size_t> wall;  // fan ray indices spanning the wall
  std::size_t factor = 0;         // the factor missing two rays on the wall
  std::vector<std::vector<std::size_t>> omitted;  // per factor: rays off the wall
  std::vector<std::size_t> tau;  // ambient-fan rays vanishing on the slab image
  StarFanData star;              // stratum fan of tau inside the ambient fan
  std::vector<std::size_t> facet_ray;  // per body facet: stratum ray index
  ToricDivisor div;              // slab divisor on the stratum fan
  ToricDivisor induced;          // restriction of the factor line bundle
  Mat sections;                  // restricted sections, stratum coordinates
  std::size_t total_sections = 0;  // full section count of the restriction
  bool basepoint_free = false;     // verdict for this slab
};

// Every wall (codimension-one cone) of the fan, intersected with the polar
// polytope.  Walls are found as shared facets of adjacent maximal cones;
// each wall omits one ray from every factor except one, where it omits two,
// and that factor indexes the slab.
inline std::vector<SlabRecord> enumerate_slabs(const LatticePolytope& polar,
                                               const Fan& f) {
  if (polar.ambient != f.ambient)
    throw input_error("enumerate_slabs: polytope and fan lattices differ");
  if (!is_complete_fan(f))
    throw input_error("enumerate_slabs: fan must be complete");
  detail::require_cracked(polar, f, "enumerate_slabs");
  auto factors = detail::shape_factors(shape_fan(f));
  if (!factors)
    throw input_error(
        "enumerate_slabs: Unsupported shape (not a product of projective "
        "spaces)");
  std::vector<std::size_t> factor_of(f.rays.size(), 0);
  for (std::size_t i = 0; i < factors->size(); ++i)
    for (std::size_t j : (*factors)[i]) factor_of[j] = i;

  std::vector<SlabRecord> out;
  for (const auto& [wall, owners] : detail::fan_walls(f)) {
    if (owners.size() != 2)
      throw theorem_violation("enumerate_slabs: wall without two incident cones");
    SlabRecord rec;
    rec.wall = wall;
    Mat normals = fan_cone_ambient_normals(f, owners[0]);
    Mat second = fan_cone_ambient_normals(f, owners[1]);
    normals.insert(normals.end(), second.begin(), second.end());
    rec.body =
        intersect_with_halfspaces(polar, normals, zero_vec(normals.size()));
    if (rec.body.dim + 1 != static_cast<int>(polar.ambient))
      throw theorem_violation("enumerate_slabs: slab is not of codimension one");
    std::vector<std::size_t> count(factors->size(), 0);
    for (std::size_t r : wall) ++count[factor_of[r]];
    std::optional<std::size_t> owner_factor;
    for (std::size_t i = 0; i < factors->size(); ++i) {
      if (count[i] + 2 != (*factors)[i].size()) continue;
      bool others = true;
      for (std::size_t j = 0; j < factors->size(); ++j)
        if (j != i) others = others && count[j] + 1 == (*factors)[j].size();
      if (others) owner_factor = i;
    }
    if (!owner_factor)
      throw theorem_violation(
          "enumerate_slabs: wall structure does not match the product shape");
    rec.factor = *owner_factor;
    rec.omitted.resize(factors->size());
    for (std::size_t i = 0; i < factors->size(); ++i)
      for (std::size_t j : (*factors)[i])
        if (!std::binary_search(wall.begin(), wall.end(), j))
          rec.omitted[i].push_back(j);
    out.push_back(std::move(rec));
  }
  return out;
}

// The toric stratum matching a slab: the embedding flattens the slab onto
// the face of the ambient polytope where the omitted divisor coordinates
// vanish, and the stratum is the star of the cone spanned by those
// coordinate rays.  Fills tau, star and the facet-to-ray matching.
inline void slab_stratum(const AmbientModel& m, SlabRecord& rec) {
  const std::size_t dim = m.ell + m.n_u;
  QMat imgs;
  for (const QVec& v : rec.body.verts) imgs.push_back(iota(m, v));
  std::vector<std::size_t> zero_slots;
  for (std::size_t j = 0; j < m.ell; ++j) {
    bool all = true;
    for (const QVec& iv : imgs) all = all && iv[j] == 0;
    if (all) zero_slots.push_back(j);
  }
  std::vector<std::size_t> expected;
  for (const auto& om : rec.omitted)
    expected.insert(expected.end(), om.begin(), om.end());
  std::sort(expected.begin(), expected.end());
  if (zero_slots != expected)
    throw theorem_violation(
        "slab_stratum: vanishing coordinates do not match the wall structure");
  // The image must be exactly the ambient-polytope face cut out by those
  // coordinates; anything else means the model and the slab disagree.
  QMat face;
  for (const QVec& qv : m.q.verts) {
    bool tight = true;
    for (std::size_t j : zero_slots) tight = tight && qv[j] == 0;
    if (tight) face.push_back(qv);
  }
  QMat sorted_imgs = imgs;
  std::sort(sorted_imgs.begin(), sorted_imgs.end());
  if (sorted_imgs != face)
    throw input_error(
        "slab_stratum: slab image is not a face of the ambient polytope "
        "(model inconsistency)");
  rec.tau.clear();
  for (std::size_t j : zero_slots) {
    Vec e = zero_vec(dim);
    e[j] = 1;
    auto r = detail::ray_index(m.sigma, e);
    if (!r)
      throw input_error(
          "slab_stratum: vanishing coordinate is not a ray of the ambient fan");
    rec.tau.push_back(*r);
  }
  std::sort(rec.tau.begin(), rec.tau.end());
  rec.star = star_fan_data(m.sigma, rec.tau);

  // The stratum must look like the slab itself.
  QMat chart_verts;
  for (const QVec& v : rec.body.verts) chart_verts.push_back(rec.body.chart(v));
  Fan nf = normal_fan(
      polytope_from_points(static_cast<std::size_t>(rec.body.dim), chart_verts));
  if (!find_fan_isomorphism(nf, rec.star.star))
    throw theorem_violation(
        "slab_stratum: stratum fan does not match the slab's normal fan");

  // Match each slab facet with the stratum ray whose supporting facet of
  // the ambient polytope is tight on the facet's image.
  std::vector<Face> facets = faces_of_dim(rec.body, rec.body.dim - 1);
  if (facets.size() != rec.star.star.rays.size())
    throw theorem_violation("slab_stratum: facet and ray counts differ");
  std::vector<std::size_t> parent_facet(rec.star.star.rays.size());
  for (std::size_t sr = 0; sr < rec.star.star.rays.size(); ++sr) {
    const Vec& parent = m.sigma.rays[rec.star.ray_origin[sr]];
    std::optional<std::size_t> found;
    for (std::size_t fi = 0; fi < m.q.fnormals.size() && !found; ++fi)
      if (primitive_vector(m.q.fnormals[fi]) == parent) found = fi;
    if (!found)
      throw theorem_violation(
          "slab_stratum: ambient ray without a supporting facet");
    parent_facet[sr] = *found;
  }
  rec.facet_ray.assign(facets.size(), std::size_t(-1));
  std::vector<bool> used(rec.star.star.rays.size(), false);
  for (std::size_t k = 0; k < facets.size(); ++k) {
    std::optional<std::size_t> match;
    for (std::size_t sr = 0; sr < rec.star.star.rays.size(); ++sr) {
      std::size_t fi = parent_facet[sr];
      bool tight = true;
      for (std::size_t vi : facets[k].verts)
        tight = tight &&
                dot(m.q.fnormals[fi], imgs[vi]) == Rat(m.q.flevels[fi]);
      if (!tight) continue;
      if (match)
        throw theorem_violation(
            "slab_stratum: slab facet supported by two stratum rays");
      match = sr;
    }
    if (!match || used[*match])
      throw theorem_violation(
          "slab_stratum: slab facets do not match the stratum rays");
    used[*match] = true;
    rec.facet_ray[k] = *match;
  }
}

// The slab divisor: each slab facet lying in the boundary of the polar
// polytope and forming one of its faces contributes the lattice length of
// the dual edge; every other facet contributes zero.  Defined for reflexive
// polytopes only.
inline ToricDivisor slab_divisor(const LatticePolytope& p, SlabRecord& rec) {
  if (!check_reflexive(p))
    throw input_error("slab_divisor: polytope is not reflexive");
  LatticePolytope polar = polar_dual(p);
  if (polar.ambient != rec.body.ambient)
    throw input_error("slab_divisor: polytope and slab lattices differ");
  for (const QVec& v : rec.body.verts)
    if (!polar.contains(v))
      throw input_error("slab_divisor: slab does not lie in the polar polytope");
  std::vector<Face> facets = faces_of_dim(rec.body, rec.body.dim - 1);
  if (rec.facet_ray.size() != facets.size())
    throw input_error("slab_divisor: stratum data missing (run slab_stratum)");
  ToricDivisor d;
  d.a = zero_vec(rec.star.star.rays.size());
  for (std::size_t k = 0; k < facets.size(); ++k) {
    QMat fv;
    for (std::size_t vi : facets[k].verts) fv.push_back(rec.body.verts[vi]);
    std::sort(fv.begin(), fv.end());
    // Vertices of p whose polar facet contains this slab facet.
    std::vector<std::size_t> tightp;
    for (std::size_t u = 0; u < p.verts.size(); ++u) {
      bool all = true;
      for (const QVec& x : fv) all = all && dot(p.verts[u], x) == Rat(-1);
      if (all) tightp.push_back(u);
    }
    if (tightp.empty()) continue;  // facet meets the interior: coefficient 0
    // The polar face cut out by those facets must be the slab facet itself;
    // otherwise the facet only crosses the boundary and contributes 0.
    std::vector<std::size_t> gverts;
    QMat gpts;
    for (std::size_t u = 0; u < polar.verts.size(); ++u) {
      bool all = true;
      for (std::size_t w : tightp)
        all = all && dot(p.verts[w], polar.verts[u]) == Rat(-1);
      if (all) {
        gverts.push_back(u);
        gpts.push_back(polar.verts[u]);
      }
    }
    if (gpts != fv) continue;
    std::optional<Face> g;
    for (const Face& cand : face_lattice(polar).faces)
      if (cand.dim >= 0 && cand.verts == gverts) {
        g = cand;
        break;
      }
    if (!g)
      throw theorem_violation("slab_divisor: matched vertex set is not a face");
    Face dual = dual_face(polar, p, *g);
    if (dual.dim != 1) continue;  // dual face is not an edge: coefficient 0
    d.a[rec.facet_ray[k]] = lattice_length(p, dual);
  }
  rec.div = d;
  return d;
}

// Restrict the slab's factor line bundle to its stratum and check that the
// result is linearly equivalent to the slab divisor.  The two sides are
// computed independently, so a mismatch is an implementation bug (or a
// model whose scaffolding is not full, which the identity assumes).
inline bool verify_slab_pullback(const AmbientModel& m, const CIData& cd,
                                 SlabRecord& rec) {
  if (rec.tau.empty() || rec.div.a.size() != rec.star.star.rays.size())
    throw input_error("verify_slab_pullback: slab pipeline data missing");
  RestrictedSections rs =
      restricted_sections(m.sigma, cd.li[rec.factor], rec.tau);
  if (!(rs.star == rec.star.star))
    throw theorem_violation("verify_slab_pullback: stratum fans disagree");
  rec.induced = rs.induced;
  rec.sections = rs.points;
  if (!linearly_equivalent(rec.star.star, rec.induced, rec.div))
    throw theorem_violation(
        "verify_slab_pullback: restricted class differs from the slab divisor");
  return true;
}

// ---------------------------------------------------------------------------
// Positivity

// Aggregate verdict: on every slab, the sections of the factor line bundle
// must restrict to a basepoint-free system on the stratum.  Each record
// also reports the restricted and total section counts, so surjectivity of
// the restriction can be read off without being required.
struct PositivityReport {
  bool positive = false;
  CIData ci;
  std::vector<SlabRecord> slabs;
};

inline PositivityReport is_positive(const AmbientModel& m, const Fan& f) {
  if (m.scaf.p.ambient != f.ambient)
    throw input_error("is_positive: polytope and fan lattices differ");
  if (!(shape_fan(f) == m.scaf.shape) || m.scaf.split.nbar != f.qm.proj)
    throw input_error("is_positive: fan is not compatible with the scaffolding");
  PositivityReport rep;
  rep.ci = ci_data(m);
  rep.slabs = enumerate_slabs(m.polar, f);
  auto run = [&m, &rep](SlabRecord& rec) {
    slab_stratum(m, rec);
    slab_divisor(m.scaf.p, rec);
    verify_slab_pullback(m, rep.ci, rec);
    rec.basepoint_free =
        is_basepoint_free(rec.star.star, rec.induced, rec.sections);
    try {
      rec.total_sections =
          lattice_points(polytope_of_sections(rec.star.star, rec.induced))
              .size();
    } catch (const input_error& e) {
      if (std::string(e.what()).find("Empty") == std::string::npos) throw;
      rec.total_sections = 0;
    }
  };
  // Slabs are independent; verdicts aggregate in enumeration order.
  if (rep.slabs.size() > 1 && std::thread::hardware_concurrency() > 1) {
    std::vector<std::future<void>> tasks;
    tasks.reserve(rep.slabs.size());
    for (SlabRecord& rec : rep.slabs)
      tasks.push_back(std::async(std::launch::async, run, std::ref(rec)));
    for (auto& t : tasks) t.get();
  } else {
    for (SlabRecord& rec : rep.slabs) run(rec);
  }
  rep.positive =
      std::all_of(rep.slabs.begin(), rep.slabs.end(),
                  [](const SlabRecord& r) { return r.basepoint_free; });
  return rep;
}

// The boundary divisor supported on the strut rays.  Its class plus the
// factor line-bundle classes must add up to the anticanonical class of the
// ambient fan; the identity is checked on every call (it needs the factor
// bundles, so the shape must be a product of projective spaces).
inline ToricDivisor anticanonical_divisor(const AmbientModel& m) {
  ToricDivisor d;
  d.a = zero_vec(m.sigma.rays.size());
  for (const Vec& rho : m.rho) {
    auto r = detail::ray_index(m.sigma, primitive_vector(rho));
    if (!r)
      throw input_error(
          "anticanonical_divisor: strut normal is not a ray of the ambient fan");
    d.a[*r] = 1;
  }
  CIData cd = ci_data(m);
  ToricDivisor total = d;
  for (const ToricDivisor& li : cd.li)
    for (std::size_t r = 0; r < total.a.size(); ++r) total.a[r] += li.a[r];
  ToricDivisor minus_k;
  minus_k.a = Vec(m.sigma.rays.size(), Int(1));
  if (!linearly_equivalent(m.sigma, total, minus_k))
    throw theorem_violation("anticanonical_divisor: class identity failed");
  return d;
}

// ---------------------------------------------------------------------------
// Singularity census

enum class ConeClass { smooth, double_point, other };

struct ConeCensusEntry {
  std::size_t cone = 0;  // maximal-cone index in the spanning fan
  ConeClass cls = ConeClass::other;
  // 1 for smooth, 2 for a double point, |det| for other simplicial cones,
  // 0 when not simplicial.
  Int index = 0;
};

struct SingularityCensus {
  Fan fan;  // spanning fan of the input polytope
  std::vector<ConeCensusEntry> cones;
  std::size_t smooth = 0, double_points = 0, other = 0;
};

namespace detail {

// A cone over a unit square at height one: four extreme rays pairing into
// two diagonals with equal sums, three corner rays forming a lattice basis.
inline bool is_double_point(const Mat& rays) {
  const std::array<std::array<std::size_t, 4>, 3> pairings = {
      {{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}}};
  for (const auto& pr : pairings) {
    if (vec_add(rays[pr[0]], rays[pr[1]]) != vec_add(rays[pr[2]], rays[pr[3]]))
      continue;
    Mat corner = {rays[pr[0]], rays[pr[2]], rays[pr[3]]};
    return is_unimodular_cone(make_cone(rays[0].size(), corner));
  }
  return false;
}

}  // namespace detail

// Classify every maximal cone of the spanning fan of a Fano polytope:
// unimodular cones are smooth points, cones over a unit square are ordinary
// double points, and everything else is reported with its multiplicity
// when simplicial.
inline SingularityCensus singularity_census(const LatticePolytope& p) {
  SingularityCensus out;
  out.fan = spanning_fan(p);
  const std::size_t n = out.fan.reduced;
  for (std::size_t ci = 0; ci < out.fan.cones.size(); ++ci) {
    Mat rays;
    for (std::size_t r : out.fan.cones[ci]) rays.push_back(out.fan.rays[r]);
    ConeCensusEntry e;
    e.cone = ci;
    if (is_unimodular_cone(make_cone(n, rays))) {
      e.cls = ConeClass::smooth;
      e.index = 1;
      ++out.smooth;
    } else if (n == 3 && rays.size() == 4 && detail::is_double_point(rays)) {
      e.cls = ConeClass::double_point;
      e.index = 2;
      ++out.double_points;
    } else {
      e.cls = ConeClass::other;
      if (rays.size() == n) {
        Int idx = 1;
        for (const Int& dvr : smith_normal_form(rays).divisors) idx *= dvr;
        e.index = idx < 0 ? Int(-idx) : idx;
      }
      ++out.other;
    }
    out.cones.push_back(e);
  }
  return out;
}

}  // namespace cracklat
