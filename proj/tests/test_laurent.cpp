#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "cracklat/laurent.hpp"

using namespace cracklat;

namespace {

LatticePolytope poly(std::size_t n, const Mat& pts) {
  return polytope_from_points(n, pts);
}

Fan fan_p2() { return product_projective_fan({2}); }
Fan fan_p1() { return product_projective_fan({1}); }
Fan fan_cube() { return product_projective_fan({1, 1, 1}); }
Fan fan_split_y() {
  return pullback_fan(product_projective_fan({1}), Mat{{0, 1}});
}

std::set<QVec> vert_set(const LatticePolytope& p) {
  return std::set<QVec>(p.verts.begin(), p.verts.end());
}

std::set<QVec> qset(const Mat& pts) {
  std::set<QVec> s;
  for (const Vec& v : pts) s.insert(to_q(v));
  return s;
}

std::set<QVec> face_vert_coords(const LatticePolytope& p, const Face& f) {
  std::set<QVec> s;
  for (std::size_t vi : f.verts) s.insert(p.verts[vi]);
  return s;
}

LatticePolytope pentagon() {
  return poly(2, {{0, -1}, {2, -1}, {0, 1}, {-1, 0}, {-1, 1}});
}

// two triangle struts of degrees 2 and 1 over the plane shape
Scaffolding pentagon_scaffolding() {
  return Scaffolding{pentagon(),
                     shape_fan(fan_p2()),
                     fan_splitting(fan_p2()),
                     {{ToricDivisor{{1, 1, 0}}, {}},
                      {ToricDivisor{{0, 0, 1}}, {}}}};
}

// quadrilateral with two degree-2 triangle struts; valid but never full
Scaffolding quad_scaffolding() {
  return Scaffolding{poly(2, {{-1, 0}, {0, -1}, {2, -1}, {-1, 2}}),
                     shape_fan(fan_p2()),
                     fan_splitting(fan_p2()),
                     {{ToricDivisor{{1, 1, 0}}, {}},
                      {ToricDivisor{{1, 0, 1}}, {}}}};
}

// square split into two vertical edges over the segment shape
Scaffolding square_scaffolding() {
  return Scaffolding{
      poly(2, {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}),
      shape_fan(fan_split_y()),
      fan_splitting(fan_split_y()),
      {{ToricDivisor{{1, 1}}, {-1}}, {ToricDivisor{{1, 1}}, {1}}}};
}

Mat cube_verts() {
  Mat m;
  for (Int a : {Int(-1), Int(1)})
    for (Int b : {Int(-1), Int(1)})
      for (Int c : {Int(-1), Int(1)}) m.push_back(Vec{a, b, c});
  return m;
}

Scaffolding cube_one_strut() {
  return Scaffolding{poly(3, cube_verts()),
                     shape_fan(fan_cube()),
                     fan_splitting(fan_cube()),
                     {{ToricDivisor{{1, 1, 1, 1, 1, 1}}, {}}}};
}

Scaffolding cube_two_boxes() {
  return Scaffolding{poly(3, cube_verts()),
                     shape_fan(fan_cube()),
                     fan_splitting(fan_cube()),
                     {{ToricDivisor{{0, 1, 1, 1, 1, 1}}, {}},
                      {ToricDivisor{{1, 1, 1, 1, 1, 0}}, {}}}};
}

// difference body of the standard tetrahedron: 12 vertices +-e_i, e_i - e_j
Mat diff_body_verts() {
  Mat m;
  for (std::size_t i = 0; i < 3; ++i)
    for (Int s : {Int(1), Int(-1)}) {
      Vec v(3, Int(0));
      v[i] = s;
      m.push_back(v);
    }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      Vec v(3, Int(0));
      v[i] = 1;
      v[j] = -1;
      m.push_back(v);
    }
  return m;
}

// polar of the difference body, scaffolded by two unit boxes
Scaffolding diff_body_scaffolding() {
  return Scaffolding{polar_dual(poly(3, diff_body_verts())),
                     shape_fan(fan_cube()),
                     fan_splitting(fan_cube()),
                     {{ToricDivisor{{1, 1, 1, 0, 0, 0}}, {}},
                      {ToricDivisor{{0, 0, 0, 1, 1, 1}}, {}}}};
}

}  // namespace

TEST_CASE("build_ambient assembles the ambient polytope and fan") {
  SUBCASE("pentagon: product of a triangle and a segment") {
    AmbientModel m = build_ambient(pentagon_scaffolding());
    CHECK(m.ell == 3);
    CHECK(m.n_u == 0);
    CHECK(m.pic_rank == 1);
    CHECK(m.rho == Mat{{-1, -1, 0}, {0, 0, -1}});
    CHECK(m.theta == Mat{{-1, -1}, {0, 1}, {1, 0}});
    CHECK(vert_set(m.q) == qset({{0, 0, 0},
                                 {0, 0, 1},
                                 {0, 1, 0},
                                 {0, 1, 1},
                                 {1, 0, 0},
                                 {1, 0, 1}}));
    CHECK(m.sigma == product_projective_fan({2, 1}));
  }
  SUBCASE("one strut over the whole cube gives a simplex") {
    AmbientModel m = build_ambient(cube_one_strut());
    CHECK(m.q.verts.size() == 7);
    CHECK(m.pic_rank == 3);
    CHECK(m.sigma == product_projective_fan({6}));
  }
  SUBCASE("two boxes over the polar difference body: product of simplices") {
    AmbientModel m = build_ambient(diff_body_scaffolding());
    CHECK(m.q.verts.size() == 16);
    CHECK(m.pic_rank == 3);
    CHECK(m.sigma == product_projective_fan({3, 3}));
  }
  SUBCASE("a lineality factor contributes unconstrained coordinates") {
    AmbientModel m = build_ambient(square_scaffolding());
    CHECK(m.ell == 2);
    CHECK(m.n_u == 1);
    CHECK(m.rho == Mat{{-1, -1, -1}, {-1, -1, 1}});
    CHECK(vert_set(m.q) ==
          qset({{0, 0, -1}, {0, 0, 1}, {0, 1, 0}, {1, 0, 0}}));
    CHECK_FALSE(is_smooth_fan(m.sigma));
  }
  SUBCASE("unbounded ambient data is rejected") {
    // two opposite point struts on a segment leave a free diagonal direction
    Scaffolding s{poly(1, {{-1}, {1}}),
                  shape_fan(fan_p1()),
                  fan_splitting(fan_p1()),
                  {{ToricDivisor{{-1, 1}}, {}}, {ToricDivisor{{1, -1}}, {}}}};
    CHECK_THROWS_WITH_AS(
        build_ambient(s),
        "build_ambient: invalid scaffolding data (Unbounded: recession ray "
        "(1,1))",
        input_error);
  }
  SUBCASE("the target must contain the origin in its interior") {
    // the pentagon scaffolding translated by (3, 0) stays valid but has no
    // polar dual
    Scaffolding s{poly(2, {{3, -1}, {5, -1}, {3, 1}, {2, 0}, {2, 1}}),
                  shape_fan(fan_p2()),
                  fan_splitting(fan_p2()),
                  {{ToricDivisor{{4, 1, -3}}, {}},
                   {ToricDivisor{{3, 0, -2}}, {}}}};
    validate_scaffolding(s);
    CHECK_THROWS_WITH_AS(
        build_ambient(s),
        "build_ambient: target polytope must contain the origin in its "
        "interior",
        input_error);
  }
}

TEST_CASE("iota embeds the polar polytope piecewise linearly") {
  AmbientModel m = build_ambient(pentagon_scaffolding());
  SUBCASE("the origin maps to the origin") {
    CHECK(iota(m, to_q(Vec{0, 0})) == to_q(Vec{0, 0, 0}));
  }
  SUBCASE("vertex images") {
    REQUIRE(m.polar.verts == QMat{to_q(Vec{-1, -1}), to_q(Vec{0, -1}),
                                  to_q(Vec{0, 1}), to_q(Vec{1, 0}),
                                  to_q(Vec{1, 1})});
    CHECK(m.iota_verts == QMat{to_q(Vec{1, 0, 0}), to_q(Vec{1, 0, 1}),
                               to_q(Vec{0, 1, 0}), to_q(Vec{0, 0, 1}),
                               to_q(Vec{0, 1, 1})});
  }
  SUBCASE("rational points on a shared edge") {
    QVec mid{Rat(1, 2), Rat(1)};
    CHECK(iota(m, mid) == QVec{Rat(0), Rat(1), Rat(1, 2)});
  }
  SUBCASE("points outside the polar polytope are rejected") {
    CHECK_THROWS_WITH_AS(iota(m, to_q(Vec{5, 5})),
                         "iota: point (5,5) is not in the polar polytope",
                         input_error);
  }
  SUBCASE("each piece lands on the coordinate face killing its cone") {
    EmbeddingReport rep = verify_embedding(m);
    REQUIRE(rep.piece_faces.size() == 3);
    CHECK(face_vert_coords(m.q, rep.piece_faces[0]) ==
          qset({{0, 0, 0}, {0, 1, 0}, {1, 0, 0}}));
    CHECK(face_vert_coords(m.q, rep.piece_faces[1]) ==
          qset({{0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {1, 0, 1}}));
    CHECK(face_vert_coords(m.q, rep.piece_faces[2]) ==
          qset({{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {0, 1, 1}}));
    for (const Face& f : rep.piece_faces) CHECK(f.dim == 2);
  }
  SUBCASE("strut functionals restrict to fixed-point vertex pairings") {
    // <rho_s, iota(p)> equals the pairing of p with the fixed point's vertex
    for (std::size_t ci = 0; ci < m.scaf.shape.cones.size(); ++ci)
      for (std::size_t si = 0; si < m.scaf.struts.size(); ++si) {
        Vec us = detail::fixed_point_image(m.scaf, ci, si);
        for (const QVec& p : m.pieces[ci].verts)
          CHECK(dot(m.rho[si], iota(m, p)) == dot(us, p));
      }
  }
}

TEST_CASE("tangent_cone_ambient matches the predicted inequalities") {
  SUBCASE("pentagon: simplicial cones of full rank at every image") {
    AmbientModel m = build_ambient(pentagon_scaffolding());
    for (std::size_t vi = 0; vi < m.polar.verts.size(); ++vi) {
      RationalCone tc = tangent_cone_ambient(m, vi);
      CHECK(tc.apex == m.iota_verts[vi]);
      CHECK(cone_hrep(tc).facets.size() == 3);
    }
  }
  SUBCASE("quad: one image sits on a non-simplicial vertex") {
    AmbientModel m = build_ambient(quad_scaffolding());
    std::vector<std::size_t> counts;
    for (std::size_t vi = 0; vi < m.polar.verts.size(); ++vi)
      counts.push_back(cone_hrep(tangent_cone_ambient(m, vi)).facets.size());
    CHECK(counts == std::vector<std::size_t>{4, 3, 3, 3});
  }
  SUBCASE("vertex index is range checked") {
    AmbientModel m = build_ambient(pentagon_scaffolding());
    CHECK_THROWS_WITH_AS(tangent_cone_ambient(m, 99),
                         "tangent_cone_ambient: vertex index out of range",
                         input_error);
  }
}

TEST_CASE("is_smooth_ambient agrees with the cracked-and-full criterion") {
  SUBCASE("pentagon: smooth, cracked, full") {
    AmbientModel m = build_ambient(pentagon_scaffolding());
    SmoothAmbientReport r = is_smooth_ambient(m, fan_p2());
    CHECK(r.smooth);
    CHECK(r.cracked.verdict);
    CHECK(r.full);
    CHECK(r.non_unimodular.empty());
  }
  SUBCASE("quad: cracked but no full scaffolding, singular ambient") {
    AmbientModel m = build_ambient(quad_scaffolding());
    SmoothAmbientReport r = is_smooth_ambient(m, fan_p2());
    CHECK_FALSE(r.smooth);
    CHECK(r.cracked.verdict);
    CHECK_FALSE(r.full);
    CHECK(r.non_unimodular == std::vector<std::size_t>{0});
    CHECK(m.polar.verts[0] == to_q(Vec{-1, -1}));
  }
  SUBCASE("square over the split fan: full but the polar is not cracked") {
    AmbientModel m = build_ambient(square_scaffolding());
    SmoothAmbientReport r = is_smooth_ambient(m, fan_split_y());
    CHECK_FALSE(r.smooth);
    CHECK_FALSE(r.cracked.verdict);
    CHECK(r.full);
    CHECK(r.non_unimodular == std::vector<std::size_t>{1, 2});
    CHECK(m.polar.verts[1] == to_q(Vec{0, -1}));
    CHECK(m.polar.verts[2] == to_q(Vec{0, 1}));
  }
  SUBCASE("cube with one strut: smooth projective space ambient") {
    AmbientModel m = build_ambient(cube_one_strut());
    CHECK(is_smooth_ambient(m, fan_cube()).smooth);
  }
  SUBCASE("cube split into two boxes: the four split facets obstruct") {
    AmbientModel m = build_ambient(cube_two_boxes());
    SmoothAmbientReport r = is_smooth_ambient(m, fan_cube());
    CHECK_FALSE(r.smooth);
    CHECK(r.cracked.verdict);
    CHECK_FALSE(r.full);
    CHECK(r.non_unimodular == std::vector<std::size_t>{1, 2, 3, 4});
  }
  SUBCASE("polar difference body: smooth product-of-simplices ambient") {
    AmbientModel m = build_ambient(diff_body_scaffolding());
    CHECK(is_smooth_ambient(m, fan_cube()).smooth);
  }
  SUBCASE("the fan must live in the scaffolding's lattice and shape") {
    AmbientModel m = build_ambient(pentagon_scaffolding());
    CHECK_THROWS_WITH_AS(is_smooth_ambient(m, fan_p1()),
                         "is_smooth_ambient: polytope and fan lattices differ",
                         input_error);
    CHECK_THROWS_WITH_AS(
        is_smooth_ambient(m, fan_split_y()),
        "is_smooth_ambient: fan is not compatible with the scaffolding",
        input_error);
  }
}

TEST_CASE("verify_embedding certifies the embedding data") {
  SUBCASE("pentagon") {
    AmbientModel m = build_ambient(pentagon_scaffolding());
    EmbeddingReport r = verify_embedding(m);
    CHECK(r.piece_faces.size() == 3);
    CHECK(r.splitting_checks == 3);
    CHECK(r.strut_identities == 6);
    CHECK(r.cone_equalities == 5);
    CHECK(r.monoid_samples == 45);
  }
  SUBCASE("the embedding exists even when the ambient space is singular") {
    AmbientModel quad = build_ambient(quad_scaffolding());
    CHECK(verify_embedding(quad).cone_equalities == 4);
    AmbientModel square = build_ambient(square_scaffolding());
    CHECK(verify_embedding(square).splitting_checks == 2);
  }
  SUBCASE("one strut: the polar embeds into a simplex") {
    AmbientModel m = build_ambient(cube_one_strut());
    EmbeddingReport r = verify_embedding(m);
    CHECK(r.piece_faces.size() == 8);
    for (const Face& f : r.piece_faces) CHECK(f.dim == 3);
    CHECK(r.strut_identities == 8);
  }
  SUBCASE("products of simplices") {
    AmbientModel m = build_ambient(diff_body_scaffolding());
    EmbeddingReport r = verify_embedding(m);
    CHECK(r.piece_faces.size() == 8);
    CHECK(r.splitting_checks == 8);
    CHECK(r.cone_equalities == 12);
    CHECK(r.monoid_samples > 0);
  }
}

TEST_CASE("splitting identities hold on every model") {
  std::vector<Scaffolding> corpus{pentagon_scaffolding(), quad_scaffolding(),
                                  square_scaffolding(), cube_one_strut(),
                                  cube_two_boxes(), diff_body_scaffolding()};
  for (const Scaffolding& s : corpus) {
    AmbientModel m = build_ambient(s);
    const std::size_t n = s.p.ambient;
    Mat theta_t = transpose(m.theta);
    // theta embeds N with free cokernel of rank pic_rank
    SnfResult sn = smith_normal_form(m.theta);
    REQUIRE(sn.divisors.size() == n);
    for (const Int& d : sn.divisors) CHECK(d == 1);
    CHECK(m.pic_rank == m.ell + m.n_u - n);
    // and every fixed-point lift splits it integrally
    for (std::size_t ci = 0; ci < m.scaf.shape.cones.size(); ++ci)
      CHECK(mat_mul(theta_t, iota_map(m, ci)) == identity_matrix(n));
  }
}
