#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>

#include "cracklat/fan.hpp"

using namespace cracklat;

namespace {

LatticePolytope poly(std::size_t n, const Mat& pts) {
  return polytope_from_points(n, pts);
}

std::size_t ray_index(const Fan& f, const Vec& r) {
  for (std::size_t i = 0; i < f.rays.size(); ++i)
    if (f.rays[i] == r) return i;
  throw input_error("ray_index: no such ray " + str(r));
}

Fan fan_p2() { return product_projective_fan({2}); }

Fan fan_f1() {
  return make_fan_reduced(
      2, {Mat{{1, 0}, {0, 1}}, Mat{{0, 1}, {-1, 1}}, Mat{{-1, 1}, {0, -1}},
          Mat{{0, -1}, {1, 0}}});
}

Mat cross3() {
  return {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
          {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
}

// independent nefness oracles
bool nef_via_msigma(const Fan& f, const ToricDivisor& d) {
  for (std::size_t ci = 0; ci < f.cones.size(); ++ci) {
    QVec m = section_vertex(f, ci, d);
    for (std::size_t r = 0; r < f.rays.size(); ++r)
      if (dot(f.rays[r], m) < Rat(-d.a[r])) return false;
  }
  return true;
}

bool nef_via_bpf(const Fan& f, const ToricDivisor& d) {
  try {
    LatticePolytope pd = polytope_of_sections(f, d);
    return is_basepoint_free(f, d, lattice_points(pd));
  } catch (const input_error& e) {
    if (std::string(e.what()).find("Empty") != std::string::npos) return false;
    throw;
  }
}

void check_nef_agreement(const Fan& f, const ToricDivisor& d) {
  bool a = is_nef(f, d);
  bool b = nef_via_msigma(f, d);
  bool c = nef_via_bpf(f, d);
  CHECK(a == b);
  CHECK(a == c);
}

}  // namespace

TEST_CASE("spanning_fan") {
  SUBCASE("standard triangle gives the projective plane") {
    Fan f = spanning_fan(poly(2, {{1, 0}, {0, 1}, {-1, -1}}));
    CHECK(f == fan_p2());
    validate_fan(f);
  }
  SUBCASE("index-3 triangle") {
    Fan f = spanning_fan(poly(2, {{-1, -1}, {2, -1}, {-1, 2}}));
    CHECK(f.cones.size() == 3);
    for (const auto& cone : f.cones) {
      Mat rays;
      for (std::size_t r : cone) rays.push_back(f.rays[r]);
      Int dd = det(rays);
      CHECK(abs(dd) == 3);
    }
    CHECK_FALSE(is_smooth_fan(f));
    CHECK(is_complete_fan(f));
  }
  SUBCASE("cross-polytope gives the triple product of lines") {
    CHECK(spanning_fan(poly(3, cross3())) == product_projective_fan({1, 1, 1}));
  }
  SUBCASE("rejects non-Fano input") {
    CHECK_THROWS_AS(spanning_fan(poly(2, {{0, 0}, {1, 0}, {0, 1}, {1, 1}})),
                    input_error);
    CHECK_THROWS_AS(spanning_fan(poly(2, {{2, 0}, {0, 2}, {-2, -2}})),
                    input_error);
  }
}

TEST_CASE("normal_fan") {
  SUBCASE("square") {
    Fan f = normal_fan(poly(2, {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}));
    CHECK(f == product_projective_fan({1, 1}));
  }
  SUBCASE("triangle times segment") {
    Mat pts;
    for (const Vec& b : Mat{{0, 0}, {1, 0}, {0, 1}})
      for (Int h : {0, 1}) pts.push_back({b[0], b[1], h});
    Fan f = normal_fan(poly(3, pts));
    CHECK(f == product_projective_fan({2, 1}));
  }
  SUBCASE("agrees with the spanning fan of the polar") {
    for (const Mat& pts :
         {Mat{{1, 0}, {0, 1}, {-1, -1}}, Mat{{-1, -1}, {2, -1}, {-1, 2}},
          Mat{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}}) {
      LatticePolytope p = poly(2, pts);
      CHECK(normal_fan(p) == spanning_fan(polar_dual(p)));
    }
    LatticePolytope oct = poly(3, cross3());
    CHECK(normal_fan(oct) == spanning_fan(polar_dual(oct)));
    LatticePolytope cube = polar_dual(oct);
    CHECK(normal_fan(cube) == spanning_fan(oct));
  }
  SUBCASE("requires full dimension") {
    CHECK_THROWS_AS(normal_fan(poly(2, {{0, 0}, {1, 1}})), input_error);
  }
}

TEST_CASE("product_projective_fan") {
  SUBCASE("plane") {
    Fan f = fan_p2();
    CHECK(f.rays == Mat{{-1, -1}, {0, 1}, {1, 0}});
    CHECK(f.cones.size() == 3);
    CHECK(f.labels[ray_index(f, {-1, -1})] == std::pair<std::size_t, std::size_t>(0, 0));
    CHECK(f.labels[ray_index(f, {1, 0})] == std::pair<std::size_t, std::size_t>(0, 1));
    CHECK(f.labels[ray_index(f, {0, 1})] == std::pair<std::size_t, std::size_t>(0, 2));
  }
  SUBCASE("triple product of lines") {
    Fan f = product_projective_fan({1, 1, 1});
    CHECK(f.rays.size() == 6);
    CHECK(f.cones.size() == 8);
    CHECK(is_smooth_fan(f));
    CHECK(is_complete_fan(f));
  }
  SUBCASE("two cubic factors") {
    Fan f = product_projective_fan({3, 3});
    CHECK(f.reduced == 6);
    CHECK(f.rays.size() == 8);
    CHECK(f.cones.size() == 16);
    CHECK(is_smooth_fan(f));
    CHECK(is_complete_fan(f));
    for (std::size_t r = 0; r < f.rays.size(); ++r) {
      CHECK(f.labels[r].first < 2);
      CHECK(f.labels[r].second <= 3);
    }
  }
  SUBCASE("rejects zero factors") {
    CHECK_THROWS_AS(product_projective_fan({2, 0}), input_error);
    CHECK_THROWS_AS(product_projective_fan({}), input_error);
  }
}

TEST_CASE("smoothness and completeness") {
  CHECK(is_smooth_fan(fan_p2()));
  CHECK(is_complete_fan(fan_p2()));
  CHECK(is_smooth_fan(fan_f1()));
  CHECK(is_complete_fan(fan_f1()));
  SUBCASE("single orthant") {
    Fan f = make_fan_reduced(2, {Mat{{1, 0}, {0, 1}}});
    CHECK(is_smooth_fan(f));
    CHECK_FALSE(is_complete_fan(f));
  }
  SUBCASE("half-space fan reduces to a line") {
    Fan base = product_projective_fan({1});
    Fan f = pullback_fan(base, Mat{{0, 1, 1}});
    CHECK(f.ambient == 3);
    CHECK(f.lin.size() == 2);
    CHECK(f.reduced == 1);
    CHECK(is_smooth_fan(f));
    CHECK(is_complete_fan(f));
    // ambient inequality of each half-space is +-(0,1,1)
    Mat n0 = fan_cone_ambient_normals(f, 0);
    Mat n1 = fan_cone_ambient_normals(f, 1);
    REQUIRE(n0.size() == 1);
    REQUIRE(n1.size() == 1);
    CHECK(n0[0] == vec_neg(n1[0]));
    Vec u = n0[0];
    if (u[1] < 0) u = vec_neg(u);
    CHECK(u == Vec{0, 1, 1});
  }
}

TEST_CASE("quotient_fan") {
  SUBCASE("zero minimal cone is a no-op") {
    CHECK(quotient_fan(fan_p2()) == fan_p2());
  }
  SUBCASE("half-space fan quotients to the line fan") {
    Fan f = pullback_fan(product_projective_fan({1}), Mat{{0, 1, 1}});
    CHECK(quotient_fan(f) == product_projective_fan({1}));
  }
  SUBCASE("pullback of the plane quotients back") {
    Fan f = pullback_fan(fan_p2(), Mat{{1, 0, 0}, {0, 1, 0}});
    CHECK(f.reduced == 2);
    Fan q = quotient_fan(f);
    CHECK(find_fan_isomorphism(q, fan_p2()).has_value());
  }
  SUBCASE("improper overlap is rejected") {
    CHECK_THROWS_AS(
        validate_fan(make_fan_reduced(
            2, {Mat{{1, 0}, {0, 1}}, Mat{{1, 1}, {1, -1}}})),
        input_error);
  }
}

TEST_CASE("is_nef and polytope_of_sections") {
  Fan p2 = fan_p2();
  SUBCASE("zero divisor") {
    ToricDivisor d = make_divisor(p2, {});
    CHECK(is_nef(p2, d));
    LatticePolytope pd = polytope_of_sections(p2, d);
    CHECK(pd.dim == 0);
    CHECK(pd.verts == QMat{zero_qvec(2)});
  }
  SUBCASE("hyperplane class") {
    ToricDivisor d = make_divisor(p2, {{{-1, -1}, 1}});
    CHECK(is_nef(p2, d));
    LatticePolytope pd = polytope_of_sections(p2, d);
    CHECK(lattice_points(pd).size() == 3);
    CHECK(pd.verts ==
          QMat{to_q(Vec{0, 0}), to_q(Vec{0, 1}), to_q(Vec{1, 0})});
  }
  SUBCASE("coefficients on two unit rays") {
    ToricDivisor d = make_divisor(p2, {{{1, 0}, 1}, {{0, 1}, 1}});
    CHECK(is_nef(p2, d));
    LatticePolytope pd = polytope_of_sections(p2, d);
    CHECK(pd.verts ==
          QMat{to_q(Vec{-1, -1}), to_q(Vec{-1, 1}), to_q(Vec{1, -1})});
    CHECK(lattice_points(pd).size() == 6);
  }
  SUBCASE("negative hyperplane") {
    ToricDivisor d = make_divisor(p2, {{{-1, -1}, -1}});
    CHECK_FALSE(is_nef(p2, d));
    CHECK_THROWS_AS(polytope_of_sections(p2, d), input_error);
  }
  SUBCASE("the (-1)-curve on the Hirzebruch surface") {
    Fan f1 = fan_f1();
    ToricDivisor e = make_divisor(f1, {{{0, 1}, 1}});
    CHECK_FALSE(is_nef(f1, e));
    ToricDivisor e2 = make_divisor(f1, {{{0, 1}, 2}});
    CHECK_FALSE(is_nef(f1, e2));
    LatticePolytope pd = polytope_of_sections(f1, e2);
    CHECK(pd.dim == 0);
    CHECK(pd.verts == QMat{zero_qvec(2)});
    ToricDivisor fib2 = make_divisor(f1, {{{1, 0}, 2}});
    CHECK(is_nef(f1, fib2));
    CHECK(lattice_points(polytope_of_sections(f1, fib2)).size() == 3);
  }
  SUBCASE("rejects unsuitable fans") {
    Fan orthant = make_fan_reduced(2, {Mat{{1, 0}, {0, 1}}});
    CHECK_THROWS_AS(is_nef(orthant, ToricDivisor{zero_vec(2)}), input_error);
    Fan sing = spanning_fan(poly(2, {{-1, -1}, {2, -1}, {-1, 2}}));
    CHECK_THROWS_AS(is_nef(sing, ToricDivisor{zero_vec(3)}), input_error);
  }
}

TEST_CASE("nef oracle agreement") {
  SUBCASE("exhaustive on small rank-2 fans") {
    for (const Fan& f : {fan_p2(), fan_f1(), product_projective_fan({1, 1})}) {
      std::size_t n = f.rays.size();
      Vec a(n, Int(-3));
      while (true) {
        check_nef_agreement(f, ToricDivisor{a});
        std::size_t j = 0;
        for (; j < n; ++j) {
          if (a[j] < 3) {
            ++a[j];
            break;
          }
          a[j] = -3;
        }
        if (j == n) break;
      }
    }
  }
  SUBCASE("exhaustive on projective 3-space") {
    Fan f = product_projective_fan({3});
    Vec a(4, Int(-3));
    while (true) {
      check_nef_agreement(f, ToricDivisor{a});
      std::size_t j = 0;
      for (; j < 4; ++j) {
        if (a[j] < 3) {
          ++a[j];
          break;
        }
        a[j] = -3;
      }
      if (j == 4) break;
    }
  }
  SUBCASE("sampled on the triple product of lines") {
    Fan f = product_projective_fan({1, 1, 1});
    std::mt19937 rng(20240818);
    std::uniform_int_distribution<int> coeff(-3, 3);
    for (int it = 0; it < 1500; ++it) {
      Vec a(6);
      for (auto& c : a) c = coeff(rng);
      check_nef_agreement(f, ToricDivisor{a});
    }
  }
}

TEST_CASE("star_fan") {
  Fan p21 = product_projective_fan({2, 1});
  SUBCASE("trivial cone") {
    CHECK(star_fan(p21, {}) == p21);
  }
  SUBCASE("line-factor ray gives the plane") {
    std::size_t tau = ray_index(p21, {0, 0, 1});
    Fan star = star_fan(p21, {tau});
    CHECK(star.reduced == 2);
    CHECK(star.rays.size() == 3);
    CHECK(star.cones.size() == 3);
    CHECK(find_fan_isomorphism(star, fan_p2()).has_value());
  }
  SUBCASE("ray count matches direct enumeration") {
    for (const Vec& ray : p21.rays) {
      std::size_t tau = ray_index(p21, ray);
      StarFanData sd = star_fan_data(p21, {tau});
      std::set<Vec> images;
      for (const auto& cone : p21.cones) {
        if (std::find(cone.begin(), cone.end(), tau) == cone.end()) continue;
        for (std::size_t r : cone) {
          Vec img = mat_vec(sd.qm.proj, p21.rays[r]);
          if (!is_zero(img)) images.insert(primitive_vector(img));
        }
      }
      CHECK(images.size() == sd.star.rays.size());
    }
  }
  SUBCASE("product of lines keeps its shape") {
    Fan f = product_projective_fan({1, 1, 1});
    Fan star = star_fan(f, {ray_index(f, {0, 0, 1})});
    CHECK(star == product_projective_fan({1, 1}));
  }
  SUBCASE("non-cones are rejected") {
    Fan f = product_projective_fan({1, 1});
    std::vector<std::size_t> tau{ray_index(f, {1, 0}), ray_index(f, {-1, 0})};
    CHECK_THROWS_AS(star_fan(f, tau), input_error);
  }
}

TEST_CASE("restricted_sections") {
  Fan p21 = product_projective_fan({2, 1});
  ToricDivisor d = make_divisor(p21, {{{-1, -1, 0}, 2}, {{0, 0, -1}, 1}});
  REQUIRE(is_nef(p21, d));
  SUBCASE("whole fan returns every section") {
    RestrictedSections rs = restricted_sections(p21, d, {});
    CHECK(rs.points.size() == 12);
    CHECK(rs.points == lattice_points(polytope_of_sections(p21, d)));
    CHECK(rs.induced.a == d.a);
  }
  SUBCASE("restriction to a line-factor stratum") {
    RestrictedSections rs =
        restricted_sections(p21, d, {ray_index(p21, {0, 0, 1})});
    CHECK(rs.points.size() == 6);
    CHECK(find_fan_isomorphism(rs.star, fan_p2()).has_value());
    Vec coeffs = rs.induced.a;
    std::sort(coeffs.begin(), coeffs.end());
    CHECK(coeffs == Vec{0, 0, 2});
    // image spans the full degree-2 system on the stratum: surjectivity
    CHECK(rs.points ==
          lattice_points(polytope_of_sections(rs.star, rs.induced)));
  }
  SUBCASE("empty restriction signals a base stratum") {
    Fan f1 = fan_f1();
    ToricDivisor e2 = make_divisor(f1, {{{0, 1}, 2}});
    RestrictedSections rs =
        restricted_sections(f1, e2, {ray_index(f1, {0, 1})});
    CHECK(rs.points.empty());
    Vec coeffs = rs.induced.a;
    std::sort(coeffs.begin(), coeffs.end());
    CHECK(coeffs == Vec{-2, 0});
  }
}

TEST_CASE("is_basepoint_free") {
  Fan f1 = fan_f1();
  SUBCASE("fixed-point criterion on the Hirzebruch surface") {
    ToricDivisor e2 = make_divisor(f1, {{{0, 1}, 2}});
    CHECK_FALSE(is_basepoint_free(
        f1, e2, lattice_points(polytope_of_sections(f1, e2))));
    ToricDivisor fib2 = make_divisor(f1, {{{1, 0}, 2}});
    CHECK(is_basepoint_free(
        f1, fib2, lattice_points(polytope_of_sections(f1, fib2))));
  }
  SUBCASE("zero divisor") {
    Fan p2 = fan_p2();
    ToricDivisor d = make_divisor(p2, {});
    CHECK(is_basepoint_free(p2, d, Mat{{0, 0}}));
  }
  SUBCASE("non-section points are rejected") {
    Fan p2 = fan_p2();
    ToricDivisor d = make_divisor(p2, {{{-1, -1}, 1}});
    CHECK_THROWS_AS(is_basepoint_free(p2, d, Mat{{5, 5}}), input_error);
  }
  SUBCASE("monotone in the section subset") {
    Fan p2 = fan_p2();
    ToricDivisor d = make_divisor(p2, {{{-1, -1}, 2}});
    Mat all = lattice_points(polytope_of_sections(p2, d));
    std::mt19937 rng(20240819);
    for (int it = 0; it < 60; ++it) {
      Mat sub1, sub2;
      for (const Vec& m : all) {
        int pick = int(rng() % 3);
        if (pick == 0) sub1.push_back(m);
        if (pick <= 1) sub2.push_back(m);
      }
      if (sub1.empty()) continue;
      bool b1 = is_basepoint_free(p2, d, sub1);
      bool b2 = is_basepoint_free(p2, d, sub2);
      if (b1) CHECK(b2);
    }
  }
}

TEST_CASE("fan isomorphism search") {
  Fan p2 = fan_p2();
  SUBCASE("identity") { CHECK(find_fan_isomorphism(p2, p2).has_value()); }
  SUBCASE("unimodular image") {
    LatticePolytope t = poly(2, {{1, 0}, {0, 1}, {-1, -1}});
    Fan image = spanning_fan(apply_unimodular(t, Mat{{2, 1}, {1, 1}}));
    auto u = find_fan_isomorphism(p2, image);
    REQUIRE(u.has_value());
    CHECK(is_unimodular_matrix(*u));
  }
  SUBCASE("distinguishes singular fans") {
    Fan sing = spanning_fan(poly(2, {{-1, -1}, {2, -1}, {-1, 2}}));
    CHECK_FALSE(find_fan_isomorphism(p2, sing).has_value());
  }
  SUBCASE("ray count mismatch") {
    CHECK_FALSE(
        find_fan_isomorphism(p2, product_projective_fan({1, 1})).has_value());
  }
}
