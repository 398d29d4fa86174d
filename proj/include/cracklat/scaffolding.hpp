#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cracklat/cracked.hpp"
#include "cracklat/fan.hpp"
#include "cracklat/matrix.hpp"
#include "cracklat/polytope.hpp"

namespace cracklat {

// A strut is a nef divisor on the shape fan together with an offset into the
// complementary sublattice.  Its geometric footprint inside the target
// lattice is the section polytope of the divisor, embedded along the Nbar
// basis and translated by chi along the N_U basis.
struct Strut {
  ToricDivisor divisor;  // coefficients indexed by the shape fan's rays
  Vec chi;               // coordinates over the splitting's N_U basis
};

// A scaffolding of p: a family of struts over a common shape fan whose
// embedded section polytopes have p as their joint convex hull, with every
// vertex of p lying in exactly one of them.  The splitting fixes how shape
// coordinates sit inside the target lattice: a section-polytope point xi at
// offset chi embeds as compose_n(xi, chi).
struct Scaffolding {
  LatticePolytope p;       // target polytope, full-dimensional
  Fan shape;               // reduced, smooth, complete
  LatticeSplitting split;  // split.nbar_rank() == shape.reduced
  std::vector<Strut> struts;
};

// The reduced fan of f, re-seated as a standalone fan with no lineality.
inline Fan shape_fan(const Fan& f) {
  std::vector<Mat> cones;
  cones.reserve(f.cones.size());
  for (const auto& c : f.cones) {
    Mat gens;
    for (std::size_t r : c) gens.push_back(f.rays[r]);
    cones.push_back(std::move(gens));
  }
  return make_fan_reduced(f.reduced, cones);
}

// The splitting induced by a fan: Nbar is the annihilator of the lineality
// space with basis dual to the fan's reduced coordinates, N_U the canonical
// complement.  With this choice decompose_n's first block recovers exactly
// the coordinates that pair dot-wise with the fan's reduced rays.
inline LatticeSplitting fan_splitting(const Fan& f) {
  if (f.lin.empty()) return make_splitting(identity_matrix(f.ambient), {});
  Mat w = completion_to_basis(f.lin);
  Mat winv_t = transpose(unimodular_inverse(w));
  Mat nu(winv_t.begin(),
         winv_t.begin() + static_cast<std::ptrdiff_t>(f.lin.size()));
  return make_splitting(f.qm.proj, nu);
}

// Section polytope of a strut, embedded into the target lattice.
inline LatticePolytope strut_polytope(const Fan& shape,
                                      const LatticeSplitting& split,
                                      const Strut& s) {
  LatticePolytope sections = polytope_of_sections(shape, s.divisor);
  Mat pts;
  pts.reserve(sections.verts.size());
  for (const QVec& v : sections.verts) {
    if (!is_integral(v))
      throw input_error("strut_polytope: section polytope has rational vertex " +
                        str(v));
    pts.push_back(split.compose_n(to_int(v), s.chi));
  }
  return polytope_from_points(split.n, pts);
}

inline LatticePolytope strut_polytope(const Scaffolding& s, std::size_t i) {
  if (i >= s.struts.size())
    throw input_error("strut_polytope: strut index out of range");
  return strut_polytope(s.shape, s.split, s.struts[i]);
}

inline std::vector<LatticePolytope> strut_polytopes(const Scaffolding& s) {
  std::vector<LatticePolytope> out;
  out.reserve(s.struts.size());
  for (std::size_t i = 0; i < s.struts.size(); ++i)
    out.push_back(strut_polytope(s, i));
  return out;
}

// Checks the defining conditions: smooth complete shape, valid splitting,
// nef struts with nonempty sections, each strut inside p, joint hull equal
// to p, and every vertex of p covered by exactly one strut.
inline Scaffolding validate_scaffolding(const Scaffolding& s) {
  if (!s.shape.lin.empty())
    throw input_error("validate_scaffolding: shape fan must be reduced");
  if (!is_smooth_fan(s.shape) || !is_complete_fan(s.shape))
    throw input_error(
        "validate_scaffolding: shape fan must be smooth and complete");
  if (!s.p.full_dim())
    throw input_error(
        "validate_scaffolding: target polytope must be full-dimensional");
  std::size_t n = s.p.ambient;
  if (s.split.n != n || s.split.nbar_rank() != s.shape.reduced ||
      s.split.nbar_rank() + s.split.nu_rank() != n)
    throw input_error("validate_scaffolding: splitting does not match the "
                      "target lattice and shape");
  LatticeSplitting canon = make_splitting(s.split.nbar, s.split.nu);
  if (canon.mbar != s.split.mbar || canon.mu != s.split.mu)
    throw input_error(
        "validate_scaffolding: splitting dual bases are inconsistent");
  if (s.struts.empty())
    throw input_error("validate_scaffolding: scaffolding has no struts");

  std::vector<LatticePolytope> polys;
  polys.reserve(s.struts.size());
  for (std::size_t i = 0; i < s.struts.size(); ++i) {
    const Strut& st = s.struts[i];
    if (st.divisor.a.size() != s.shape.rays.size())
      throw input_error("validate_scaffolding: strut " + std::to_string(i) +
                        " divisor does not match the shape fan rays");
    if (st.chi.size() != s.split.nu_rank())
      throw input_error("validate_scaffolding: strut " + std::to_string(i) +
                        " offset does not match the splitting");
    if (!is_nef(s.shape, st.divisor))
      throw input_error("validate_scaffolding: strut " + std::to_string(i) +
                        " divisor is not nef");
    polys.push_back(strut_polytope(s.shape, s.split, st));
    for (const QVec& v : polys.back().verts)
      if (!s.p.contains(v))
        throw input_error("validate_scaffolding: strut " + std::to_string(i) +
                          " escapes the polytope at " + str(v));
  }

  Mat all;
  for (const LatticePolytope& q : polys)
    for (const QVec& v : q.verts) all.push_back(to_int(v));
  if (!(polytope_from_points(n, all) == s.p))
    throw input_error(
        "validate_scaffolding: struts span a proper subpolytope of the target");

  for (const QVec& v : s.p.verts) {
    std::size_t hits = 0;
    for (const LatticePolytope& q : polys)
      if (q.contains(v)) ++hits;
    if (hits != 1)
      throw input_error("validate_scaffolding: UniqueVertexCover: vertex " +
                        str(v) + " lies in " + std::to_string(hits) +
                        " strut polytopes");
  }
  return s;
}

namespace detail {

// Accept a polytope when it or its polar is cracked along the fan; the
// constructions below are meaningful in either reading.
inline void require_cracked(const LatticePolytope& p, const Fan& f,
                            const std::string& who) {
  bool ok = is_cracked(p, f).verdict;
  if (!ok) ok = is_cracked(polar_dual(p), f).verdict;
  if (!ok)
    throw input_error(who + ": polytope is not cracked along the fan");
}

// Vertical faces computed from dual-vertex cone spans: a proper face is
// vertical iff, for every facet containing it, the face's directions
// annihilate the span of the minimal fan cone containing that facet's dual
// vertex.  Coincides with vertical_faces() whenever every facet carries a
// Cayley structure (the pairing directions span exactly that cone), and
// remains defined when some facet does not.
inline std::vector<Face> vertical_faces_by_span(const LatticePolytope& p,
                                                const Fan& f) {
  if (p.ambient != f.ambient)
    throw input_error("vertical_faces_by_span: polytope and fan differ");
  LatticePolytope polar = polar_dual(p);
  std::vector<Face> facets = faces_of_dim(p, int(p.dim) - 1);
  Mat lift_t = transpose(f.qm.lift);
  std::vector<Mat> spans;
  spans.reserve(facets.size());
  for (const Face& fc : facets) {
    std::optional<std::size_t> dual;
    for (std::size_t i = 0; i < polar.verts.size() && !dual; ++i) {
      bool tight = true;
      for (std::size_t vi : fc.verts)
        tight = tight && dot(polar.verts[i], p.verts[vi]) == Rat(-1);
      if (tight) dual = i;
    }
    if (!dual)
      throw input_error("vertical_faces_by_span: facet without a dual vertex");
    Vec v = primitive_vector(polar.verts[*dual]);
    Mat span = f.lin;
    for (std::size_t r : minimal_cone_containing(f, v))
      span.push_back(mat_vec(lift_t, f.rays[r]));
    spans.push_back(std::move(span));
  }

  std::vector<Face> out;
  for (const Face& e : face_lattice(p).faces) {
    if (e.dim < 0 || e.dim == p.dim) continue;
    bool vertical = true;
    for (std::size_t fi = 0; fi < facets.size() && vertical; ++fi) {
      if (!std::includes(facets[fi].verts.begin(), facets[fi].verts.end(),
                         e.verts.begin(), e.verts.end()))
        continue;
      for (std::size_t k = 1; k < e.verts.size() && vertical; ++k) {
        QVec d = qvec_sub(p.verts[e.verts[k]], p.verts[e.verts[0]]);
        for (const Vec& row : spans[fi])
          vertical = vertical && dot(row, d) == Rat(0);
      }
    }
    if (vertical) out.push_back(e);
  }
  return out;
}

// The Cayley-structure notion when it applies, its span extension otherwise.
inline std::vector<Face> vertical_faces_for_scaffold(const LatticePolytope& p,
                                                     const Fan& f) {
  try {
    return vertical_faces(p, f);
  } catch (const input_error&) {
    return vertical_faces_by_span(p, f);
  }
}

}  // namespace detail

// Per-face covering data gathered while testing fullness.
struct FullnessReport {
  std::vector<Face> vertical;  // proper vertical faces of the target
  std::vector<std::optional<std::size_t>> strut;  // covering strut per face
};

// A validated scaffolding is full along f when every vertical face of the
// target lies inside some strut polytope.  The covering strut is unique by
// the vertex-cover condition; the report records it per face.
inline bool is_full(const Scaffolding& s, const Fan& f,
                    FullnessReport* report = nullptr) {
  validate_scaffolding(s);
  if (s.p.ambient != f.ambient)
    throw input_error("is_full: polytope and fan lattices differ");
  if (!(shape_fan(f) == s.shape) || s.split.nbar != f.qm.proj)
    throw input_error("is_full: fan is not compatible with the scaffolding");
  detail::require_cracked(s.p, f, "is_full");

  std::vector<Face> vertical = detail::vertical_faces_for_scaffold(s.p, f);
  std::vector<LatticePolytope> polys = strut_polytopes(s);
  bool full = true;
  if (report) {
    report->vertical = vertical;
    report->strut.assign(vertical.size(), std::nullopt);
  }
  for (std::size_t ei = 0; ei < vertical.size(); ++ei) {
    std::optional<std::size_t> owner;
    for (std::size_t i = 0; i < polys.size() && !owner; ++i) {
      bool inside = true;
      for (std::size_t vi : vertical[ei].verts)
        inside = inside && polys[i].contains(s.p.verts[vi]);
      if (inside) owner = i;
    }
    if (!owner) full = false;
    if (report) report->strut[ei] = owner;
  }
  return full;
}

// Scaffold a polytope over the projective line: one segment strut per edge
// running along the Nbar direction, then a point strut for every vertex not
// covered by such an edge.
inline Scaffolding scaffold_shape_p1(const LatticePolytope& p, const Fan& f) {
  if (p.ambient != f.ambient)
    throw input_error("scaffold_shape_p1: polytope and fan lattices differ");
  Fan shape = shape_fan(f);
  if (!(shape == product_projective_fan({1})))
    throw input_error(
        "scaffold_shape_p1: shape fan is not the projective line");
  if (!p.full_dim() || !is_lattice_polytope(p))
    throw input_error("scaffold_shape_p1: polytope must be a full-dimensional "
                      "lattice polytope");
  detail::require_cracked(p, f, "scaffold_shape_p1");

  LatticeSplitting split = fan_splitting(f);
  const Vec w = split.nbar[0];  // direction spanned by the Nbar line
  std::vector<Strut> struts;
  std::vector<char> covered(p.verts.size(), 0);
  for (const Face& e : faces_of_dim(p, 1)) {
    if (e.dim == p.dim) continue;  // a segment target is its own 1-face
    Vec d = primitive_vector(
        qvec_sub(p.verts[e.verts[1]], p.verts[e.verts[0]]));
    if (d != w && vec_neg(d) != w) continue;
    auto [xa, ca] = split.decompose_n(to_int(p.verts[e.verts[0]]));
    auto [xb, cb] = split.decompose_n(to_int(p.verts[e.verts[1]]));
    Int lo = std::min(xa[0], xb[0]), hi = std::max(xa[0], xb[0]);
    // shape rays sort as {(-1), (+1)}: coefficients bound xi to [lo, hi]
    struts.push_back({ToricDivisor{{hi, -lo}}, ca});
    covered[e.verts[0]] = covered[e.verts[1]] = 1;
  }
  for (std::size_t i = 0; i < p.verts.size(); ++i) {
    if (covered[i]) continue;
    auto [xi, chi] = split.decompose_n(to_int(p.verts[i]));
    struts.push_back({ToricDivisor{{xi[0], -xi[0]}}, chi});
  }
  return validate_scaffolding(
      Scaffolding{p, std::move(shape), std::move(split), std::move(struts)});
}

// Exhaustion record for search_full_scaffolding.
struct ScaffoldSearchCertificate {
  std::vector<Strut> candidates;  // every strut with footprint inside p
  Vec degree_bound;               // searched degree cap per projective factor
  std::vector<Face> uncoverable;  // vertical faces inside no candidate
  std::uint64_t nodes = 0;        // cover-search nodes visited
};

namespace detail {

// Factorization of a reduced fan as a product of projective spaces.
struct ProductShape {
  std::vector<std::size_t> ks;      // factor dimensions, ascending
  std::vector<std::size_t> ray_of;  // product fan ray index -> shape ray index
  Mat u;                            // product ray coordinates -> shape rays
  Fan product;                      // product_projective_fan(ks)
};

inline void enumerate_partitions(std::size_t total, std::size_t parts,
                                 std::size_t least,
                                 std::vector<std::size_t>& cur,
                                 std::vector<std::vector<std::size_t>>& out) {
  if (parts == 0) {
    if (total == 0) out.push_back(cur);
    return;
  }
  for (std::size_t k = least; k * parts <= total; ++k) {
    cur.push_back(k);
    enumerate_partitions(total - k, parts - 1, k, cur, out);
    cur.pop_back();
  }
}

inline std::optional<ProductShape> product_structure(const Fan& shape) {
  std::size_t q = shape.reduced;
  if (!shape.lin.empty() || shape.rays.size() <= q) return std::nullopt;
  std::size_t m = shape.rays.size() - q;
  std::vector<std::vector<std::size_t>> partitions;
  std::vector<std::size_t> cur;
  enumerate_partitions(q, m, 1, cur, partitions);
  for (const auto& ks : partitions) {
    Fan product = product_projective_fan(ks);
    auto u = find_fan_isomorphism(product, shape);
    if (!u) continue;
    ProductShape ps;
    ps.ks = ks;
    ps.u = *u;
    ps.product = std::move(product);
    ps.ray_of.resize(ps.product.rays.size());
    for (std::size_t r = 0; r < ps.product.rays.size(); ++r) {
      Vec img = mat_vec(ps.u, ps.product.rays[r]);
      auto it = std::lower_bound(shape.rays.begin(), shape.rays.end(), img);
      ps.ray_of[r] = std::size_t(it - shape.rays.begin());
    }
    return ps;
  }
  return std::nullopt;
}

}  // namespace detail

// Exhaustive search for a full scaffolding whose shape is a product of
// projective spaces.  Candidate struts are the translated products of
// dilated unit simplices (one per nef divisor class representative) whose
// footprint lies inside p, with offsets ranging over the N_U bounding box of
// p.  Among candidates usable in a full scaffolding, the lexicographically
// least exact vertex cover (in candidate order: divisor coefficients, then
// offset) is returned; "none" comes with an exhaustion certificate.
inline std::optional<Scaffolding> search_full_scaffolding(
    const LatticePolytope& p, const Fan& f,
    ScaffoldSearchCertificate* cert = nullptr) {
  if (p.ambient != f.ambient)
    throw input_error(
        "search_full_scaffolding: polytope and fan lattices differ");
  if (!p.full_dim() || !is_lattice_polytope(p))
    throw input_error("search_full_scaffolding: polytope must be a "
                      "full-dimensional lattice polytope");
  Fan shape = shape_fan(f);
  auto prod = detail::product_structure(shape);
  if (!prod)
    throw input_error("search_full_scaffolding: Unsupported shape (not a "
                      "product of projective spaces)");
  detail::require_cracked(p, f, "search_full_scaffolding");
  LatticeSplitting split = fan_splitting(f);

  std::size_t q = shape.reduced;
  std::size_t nfac = prod->ks.size();
  // factor and role of every product-fan ray: unit rays carry one positive
  // coordinate, the remaining ray of each factor is all -1 on its block
  std::vector<std::size_t> factor_of_coord(q);
  {
    std::size_t off = 0;
    for (std::size_t i = 0; i < nfac; ++i)
      for (std::size_t j = 0; j < prod->ks[i]; ++j) factor_of_coord[off++] = i;
  }
  std::vector<std::optional<std::size_t>> unit_coord(prod->product.rays.size());
  std::vector<std::optional<std::size_t>> neg_factor(prod->product.rays.size());
  for (std::size_t r = 0; r < prod->product.rays.size(); ++r) {
    const Vec& ray = prod->product.rays[r];
    std::size_t nz = 0, last = 0;
    for (std::size_t j = 0; j < q; ++j)
      if (ray[j] != 0) ++nz, last = j;
    if (nz == 1 && ray[last] == 1)
      unit_coord[r] = last;
    else
      neg_factor[r] = factor_of_coord[last];
  }

  // coordinates of p's vertices: eta in the product frame, chi in N_U
  Mat ut = transpose(prod->u);
  Mat etas, chis;
  for (const QVec& v : p.verts) {
    auto [xi, chi] = split.decompose_n(to_int(v));
    etas.push_back(mat_vec(ut, xi));
    chis.push_back(chi);
  }
  auto column_range = [](const Mat& rows, std::size_t j) {
    Int lo = rows[0][j], hi = rows[0][j];
    for (const Vec& r : rows) {
      lo = std::min(lo, r[j]);
      hi = std::max(hi, r[j]);
    }
    return std::pair<Int, Int>(lo, hi);
  };
  std::vector<Int> lo(q), hi(q);
  for (std::size_t j = 0; j < q; ++j) std::tie(lo[j], hi[j]) = column_range(etas, j);
  Vec degree_bound(nfac, 0);
  for (std::size_t i = 0; i < nfac; ++i) {
    Int sum_lo = 0, sum_hi = 0, width = -1;
    for (std::size_t j = 0; j < q; ++j) {
      if (factor_of_coord[j] != i) continue;
      if (width < 0 || hi[j] - lo[j] < width) width = hi[j] - lo[j];
    }
    for (const Vec& eta : etas) {
      Int s = 0;
      for (std::size_t j = 0; j < q; ++j)
        if (factor_of_coord[j] == i) s += eta[j];
      if (&eta == &etas.front()) sum_lo = sum_hi = s;
      sum_lo = std::min(sum_lo, s);
      sum_hi = std::max(sum_hi, s);
    }
    degree_bound[i] = std::min(width, Int(sum_hi - sum_lo));
  }
  std::vector<Int> clo(split.nu_rank()), chi_hi(split.nu_rank());
  for (std::size_t j = 0; j < split.nu_rank(); ++j)
    std::tie(clo[j], chi_hi[j]) = column_range(chis, j);

  // enumerate candidates: degree tuple, translation, offset
  std::vector<Strut> candidates;
  std::vector<LatticePolytope> footprints;
  Vec d(nfac, 0), tau(q, 0), chi(split.nu_rank(), 0);
  auto emit = [&]() {
    Vec a_prod(prod->product.rays.size(), 0);
    for (std::size_t r = 0; r < a_prod.size(); ++r) {
      if (unit_coord[r]) {
        a_prod[r] = -tau[*unit_coord[r]];
      } else {
        Int s = d[*neg_factor[r]];
        for (std::size_t j = 0; j < q; ++j)
          if (factor_of_coord[j] == *neg_factor[r]) s += tau[j];
        a_prod[r] = s;
      }
    }
    Vec a_shape(shape.rays.size(), 0);
    for (std::size_t r = 0; r < a_prod.size(); ++r)
      a_shape[prod->ray_of[r]] = a_prod[r];
    Strut st{ToricDivisor{a_shape}, chi};
    LatticePolytope foot = strut_polytope(shape, split, st);
    for (const QVec& v : foot.verts)
      if (!p.contains(v)) return;
    candidates.push_back(std::move(st));
    footprints.push_back(std::move(foot));
  };
  auto loop_chi = [&](auto&& self, std::size_t j) -> void {
    if (j == split.nu_rank()) {
      emit();
      return;
    }
    for (chi[j] = clo[j]; chi[j] <= chi_hi[j]; ++chi[j]) self(self, j + 1);
  };
  auto loop_tau = [&](auto&& self, std::size_t j) -> void {
    if (j == q) {
      loop_chi(loop_chi, 0);
      return;
    }
    for (tau[j] = lo[j]; tau[j] + d[factor_of_coord[j]] <= hi[j]; ++tau[j])
      self(self, j + 1);
  };
  auto loop_d = [&](auto&& self, std::size_t i) -> void {
    if (i == nfac) {
      loop_tau(loop_tau, 0);
      return;
    }
    for (d[i] = 0; d[i] <= degree_bound[i]; ++d[i]) self(self, i + 1);
  };
  loop_d(loop_d, 0);

  // deterministic candidate order: divisor coefficients, then offset
  {
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (candidates[a].divisor.a != candidates[b].divisor.a)
        return candidates[a].divisor.a < candidates[b].divisor.a;
      return candidates[a].chi < candidates[b].chi;
    });
    std::vector<Strut> cs;
    std::vector<LatticePolytope> fs;
    for (std::size_t i : order) {
      cs.push_back(std::move(candidates[i]));
      fs.push_back(std::move(footprints[i]));
    }
    candidates = std::move(cs);
    footprints = std::move(fs);
  }

  std::vector<Face> vertical = detail::vertical_faces_for_scaffold(p, f);
  auto face_inside = [&](const Face& e, std::size_t c) {
    for (std::size_t vi : e.verts)
      if (!footprints[c].contains(p.verts[vi])) return false;
    return true;
  };
  std::vector<Face> uncoverable;
  for (const Face& e : vertical) {
    bool coverable = false;
    for (std::size_t c = 0; c < candidates.size() && !coverable; ++c)
      coverable = face_inside(e, c);
    if (!coverable) uncoverable.push_back(e);
  }

  // vertex incidence and fullness prefilter: a candidate can appear in a
  // full scaffolding only if it contains every vertical face through each
  // vertex it covers (the covering strut of a vertex is unique)
  std::size_t nv = p.verts.size();
  std::vector<std::vector<std::size_t>> vertical_through(nv);
  for (std::size_t ei = 0; ei < vertical.size(); ++ei)
    for (std::size_t vi : vertical[ei].verts) vertical_through[vi].push_back(ei);
  std::vector<std::vector<char>> covers(candidates.size(),
                                        std::vector<char>(nv, 0));
  std::vector<char> usable(candidates.size(), 1);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    bool any = false;
    for (std::size_t vi = 0; vi < nv; ++vi) {
      if (!footprints[c].contains(p.verts[vi])) continue;
      covers[c][vi] = 1;
      any = true;
      for (std::size_t ei : vertical_through[vi])
        usable[c] = usable[c] && face_inside(vertical[ei], c);
    }
    usable[c] = usable[c] && any;  // only vertex-covering struts are searched
  }

  std::uint64_t nodes = 0;
  std::vector<std::vector<std::size_t>> by_vertex(nv);
  for (std::size_t c = 0; c < candidates.size(); ++c)
    if (usable[c])
      for (std::size_t vi = 0; vi < nv; ++vi)
        if (covers[c][vi]) by_vertex[vi].push_back(c);

  auto disjoint = [&](const std::vector<char>& covered, std::size_t c) {
    for (std::size_t vi = 0; vi < nv; ++vi)
      if (covered[vi] && covers[c][vi]) return false;
    return true;
  };
  auto feasible = [&](auto&& self, std::vector<char> covered,
                      std::size_t least) -> bool {
    ++nodes;
    std::size_t v = nv;
    for (std::size_t vi = 0; vi < nv; ++vi)
      if (!covered[vi]) {
        v = vi;
        break;
      }
    if (v == nv) return true;
    for (std::size_t c : by_vertex[v]) {
      if (c < least || !disjoint(covered, c)) continue;
      std::vector<char> next = covered;
      for (std::size_t vi = 0; vi < nv; ++vi)
        next[vi] = next[vi] || covers[c][vi];
      if (self(self, std::move(next), least)) return true;
    }
    return false;
  };

  std::optional<std::vector<std::size_t>> chosen;
  if (uncoverable.empty() && feasible(feasible, std::vector<char>(nv, 0), 0)) {
    // lexicographically least solution: repeatedly force the least candidate
    // admitting a completion among strictly larger indices
    std::vector<std::size_t> sol;
    std::vector<char> covered(nv, 0);
    std::size_t least = 0;
    while (std::count(covered.begin(), covered.end(), char(1)) !=
           std::ptrdiff_t(nv)) {
      bool advanced = false;
      for (std::size_t c = least; c < candidates.size() && !advanced; ++c) {
        if (!usable[c] || !disjoint(covered, c)) continue;
        std::vector<char> next = covered;
        for (std::size_t vi = 0; vi < nv; ++vi)
          next[vi] = next[vi] || covers[c][vi];
        if (feasible(feasible, next, c + 1)) {
          sol.push_back(c);
          covered = std::move(next);
          least = c + 1;
          advanced = true;
        }
      }
      if (!advanced)
        throw input_error("search_full_scaffolding: cover search invariant "
                          "violated");
    }
    chosen = std::move(sol);
  }

  if (cert) {
    cert->candidates = candidates;
    cert->degree_bound = degree_bound;
    cert->uncoverable = uncoverable;
    cert->nodes = nodes;
  }
  if (!chosen) return std::nullopt;
  std::vector<Strut> struts;
  for (std::size_t c : *chosen) struts.push_back(candidates[c]);
  return validate_scaffolding(
      Scaffolding{p, std::move(shape), std::move(split), std::move(struts)});
}

}  // namespace cracklat
