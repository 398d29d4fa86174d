#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cracklat/matrix.hpp"

using namespace cracklat;

namespace {

Mat random_matrix(std::mt19937& rng, std::size_t m, std::size_t n, int lo,
                  int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  Mat a(m, zero_vec(n));
  for (auto& row : a)
    for (auto& x : row) x = d(rng);
  return a;
}

// Product of random elementary operations: always unimodular.
Mat random_unimodular(std::mt19937& rng, std::size_t n, int ops = 12) {
  Mat u = identity_matrix(n);
  std::uniform_int_distribution<int> idx(0, static_cast<int>(n) - 1);
  std::uniform_int_distribution<int> coef(-3, 3);
  for (int k = 0; k < ops; ++k) {
    int i = idx(rng), j = idx(rng);
    if (i == j) {
      for (auto& x : u[static_cast<std::size_t>(i)]) x = -x;
      continue;
    }
    Int c = coef(rng);
    for (std::size_t t = 0; t < n; ++t)
      u[static_cast<std::size_t>(i)][t] +=
          c * u[static_cast<std::size_t>(j)][t];
  }
  return u;
}

bool is_echelon_hnf(const Mat& h) {
  std::ptrdiff_t prev = -1;
  for (std::size_t i = 0; i < h.size(); ++i) {
    std::ptrdiff_t p = -1;
    for (std::size_t j = 0; j < h[i].size(); ++j)
      if (h[i][j] != 0) {
        p = static_cast<std::ptrdiff_t>(j);
        break;
      }
    if (p < 0) {
      for (std::size_t k = i; k < h.size(); ++k)
        if (!is_zero(h[k])) return false;
      return true;
    }
    if (p <= prev) return false;
    if (h[i][static_cast<std::size_t>(p)] <= 0) return false;
    for (std::size_t k = 0; k < i; ++k) {
      const Int& above = h[k][static_cast<std::size_t>(p)];
      if (above < 0 || above >= h[i][static_cast<std::size_t>(p)]) return false;
    }
    prev = p;
  }
  return true;
}

}  // namespace

TEST_CASE("hermite normal form on fixed inputs") {
  Mat id = identity_matrix(3);
  HnfResult h = hermite_normal_form(id);
  CHECK(h.H == id);
  CHECK(h.U == id);
  CHECK(h.rank == 3);

  Mat diag{{Int(2), Int(0)}, {Int(0), Int(3)}};
  h = hermite_normal_form(diag);
  CHECK(h.H == diag);
  CHECK(h.U == identity_matrix(2));

  Mat a{{Int(2), Int(4)}, {Int(1), Int(1)}};
  h = hermite_normal_form(a);
  Mat expected{{Int(1), Int(1)}, {Int(0), Int(2)}};
  CHECK(h.H == expected);
  CHECK(mat_mul(h.U, a) == h.H);
}

TEST_CASE("hermite normal form randomized properties") {
  std::mt19937 rng(20240811);
  for (int trial = 0; trial < 100; ++trial) {
    Mat a = random_matrix(rng, 4, 4, -9, 9);
    HnfResult h = hermite_normal_form(a);
    CHECK(mat_mul(h.U, a) == h.H);
    Int du = det(h.U);
    CHECK((du == 1 || du == -1));
    CHECK(is_echelon_hnf(h.H));
    // H is a lattice invariant: unimodular row mixing cannot change it.
    Mat v = random_unimodular(rng, 4);
    CHECK(hermite_normal_form(mat_mul(v, a)).H == h.H);
  }
}

TEST_CASE("smith normal form on fixed inputs") {
  SnfResult s = smith_normal_form(identity_matrix(3));
  CHECK(s.D == identity_matrix(3));
  CHECK(s.divisors == std::vector<Int>{1, 1, 1});

  Mat two{{Int(2), Int(0)}, {Int(0), Int(2)}};
  s = smith_normal_form(two);
  CHECK(s.D == two);
  CHECK(s.divisors == std::vector<Int>{2, 2});

  Mat a{{Int(1), Int(2)}, {Int(3), Int(4)}};
  s = smith_normal_form(a);
  CHECK(s.divisors == std::vector<Int>{1, 2});
  CHECK(mat_mul(mat_mul(s.U, a), s.V) == s.D);
}

TEST_CASE("smith normal form randomized properties") {
  std::mt19937 rng(20240812);
  for (int trial = 0; trial < 60; ++trial) {
    Mat a = random_matrix(rng, 3, 5, -9, 9);
    SnfResult s = smith_normal_form(a);
    CHECK(mat_mul(mat_mul(s.U, a), s.V) == s.D);
    CHECK(is_unimodular_matrix(s.U));
    CHECK(is_unimodular_matrix(s.V));
    for (std::size_t i = 0; i + 1 < s.divisors.size(); ++i) {
      CHECK(s.divisors[i] > 0);
      CHECK(s.divisors[i + 1] % s.divisors[i] == 0);
    }
    Mat p = random_unimodular(rng, 3), q = random_unimodular(rng, 5);
    SnfResult s2 = smith_normal_form(mat_mul(p, mat_mul(a, q)));
    CHECK(s2.divisors == s.divisors);
  }
}

TEST_CASE("primitive vectors") {
  CHECK(primitive_vector(Vec{2, 4, 6}) == Vec{1, 2, 3});
  CHECK(primitive_vector(Vec{-3, 3}) == Vec{-1, 1});
  CHECK(primitive_vector(Vec{0, 1, 1}) == Vec{0, 1, 1});
  CHECK_THROWS_AS(primitive_vector(Vec{0, 0}), input_error);
  CHECK(primitive_vector(QVec{Rat(1, 2), Rat(0), Rat(3, 2)}) == Vec{1, 0, 3});

  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Mat a = random_matrix(rng, 1, 4, -20, 20);
    if (is_zero(a[0])) continue;
    Vec p = primitive_vector(a[0]);
    CHECK(primitive_vector(p) == p);
    CHECK(content(p) == 1);
  }
}

TEST_CASE("integral linear solve") {
  Mat id = identity_matrix(3);
  Vec b{5, -7, 0};
  auto x = solve_integral(id, b);
  REQUIRE(x.has_value());
  CHECK(*x == b);

  CHECK_FALSE(solve_integral(Mat{{Int(2)}}, Vec{1}).has_value());

  Mat a{{Int(1), Int(2)}, {Int(0), Int(3)}};
  x = solve_integral(a, Vec{1, 3});
  REQUIRE(x.has_value());
  CHECK(*x == Vec{-1, 1});

  std::mt19937 rng(20240813);
  for (int trial = 0; trial < 60; ++trial) {
    Mat m = random_matrix(rng, 3, 4, -6, 6);
    Mat xs = random_matrix(rng, 1, 4, -5, 5);
    Vec rhs = mat_vec(m, xs[0]);
    auto sol = solve_integral(m, rhs);
    REQUIRE(sol.has_value());
    CHECK(mat_vec(m, *sol) == rhs);
  }
}

TEST_CASE("rational solve and inverse") {
  Mat a{{Int(2), Int(1)}, {Int(1), Int(1)}};
  auto inv = inverse_rational(a);
  REQUIRE(inv.has_value());
  QMat prod(2, zero_qvec(2));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t t = 0; t < 2; ++t)
        prod[i][j] += Rat(a[i][t]) * (*inv)[t][j];
  CHECK(prod == to_q(identity_matrix(2)));

  auto sol = solve_rational(a, QVec{Rat(1), Rat(0)});
  REQUIRE(sol.has_value());
  CHECK(*sol == QVec{Rat(1), Rat(-1)});

  Mat sing{{Int(1), Int(2)}, {Int(2), Int(4)}};
  CHECK_FALSE(inverse_rational(sing).has_value());
  CHECK_FALSE(solve_rational(sing, QVec{Rat(1), Rat(0)}).has_value());
}

TEST_CASE("kernels and saturation") {
  Mat a{{Int(1), Int(1), Int(1)}};
  Mat k = integer_kernel(a);
  REQUIRE(k.size() == 2);
  for (const Vec& row : k) CHECK(dot(a[0], row) == 0);
  SnfResult s = smith_normal_form(k);
  CHECK(s.divisors == std::vector<Int>{1, 1});

  CHECK(integer_kernel(identity_matrix(3)).empty());

  Mat doubled{{Int(2), Int(0)}, {Int(0), Int(2)}};
  CHECK(saturate_rows(doubled) == identity_matrix(2));
  Mat one_row{{Int(2), Int(2), Int(0)}};
  CHECK(saturate_rows(one_row) == Mat{{Int(1), Int(1), Int(0)}});
}

TEST_CASE("determinant") {
  Mat a{{Int(2), Int(0), Int(1)}, {Int(1), Int(1), Int(0)},
        {Int(0), Int(3), Int(1)}};
  CHECK(det(a) == 5);
  CHECK(det(identity_matrix(4)) == 1);
  Mat sing{{Int(1), Int(2)}, {Int(2), Int(4)}};
  CHECK(det(sing) == 0);

  std::mt19937 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    Mat m = random_matrix(rng, 3, 3, -7, 7);
    Int cofactor = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                   m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                   m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    CHECK(det(m) == cofactor);
  }
}

TEST_CASE("basis completion and quotient maps") {
  Mat u{{Int(0), Int(1), Int(1)}};
  Mat full = completion_to_basis(u);
  CHECK(full.size() == 3);
  CHECK(full[0] == u[0]);
  CHECK(is_unimodular_matrix(full));

  CHECK_THROWS_AS(completion_to_basis(Mat{{Int(0), Int(2), Int(2)}}),
                  input_error);

  QuotientMap q = quotient_by(u, 3);
  REQUIRE(q.proj.size() == 2);
  CHECK(mat_vec(q.proj, Vec{0, 1, 1}) == zero_vec(2));
  CHECK(mat_mul(q.proj, transpose(q.lift)) == identity_matrix(2));

  QuotientMap trivial = quotient_by({}, 4);
  CHECK(trivial.proj == identity_matrix(4));
}

TEST_CASE("lattice splittings") {
  LatticeSplitting s = splitting_from_nbar(Mat{{Int(0), Int(1), Int(1)}});
  CHECK(s.nbar_rank() == 1);
  CHECK(s.nu_rank() == 2);
  for (std::size_t i = 0; i < s.nbar.size(); ++i)
    for (std::size_t j = 0; j < s.nu.size(); ++j) {
      CHECK(dot(s.mbar[i], s.nu[j]) == 0);
      CHECK(dot(s.mu[j], s.nbar[i]) == 0);
    }
  for (std::size_t i = 0; i < s.nbar.size(); ++i)
    CHECK(dot(s.mbar[i], s.nbar[i]) == 1);

  std::mt19937 rng(20240814);
  for (int trial = 0; trial < 30; ++trial) {
    Vec x = random_matrix(rng, 1, 3, -9, 9)[0];
    auto [cb, cu] = s.decompose_n(x);
    CHECK(s.compose_n(cb, cu) == x);
    auto [mb, muc] = s.decompose_m(x);
    CHECK(s.compose_m(mb, muc) == x);
  }

  CHECK_THROWS_AS(
      make_splitting(Mat{{Int(2), Int(0)}}, Mat{{Int(0), Int(1)}}),
      input_error);

  LatticeSplitting t = splitting_from_nu(Mat{{Int(0), Int(0), Int(1)}}, 3);
  CHECK(t.nbar_rank() == 2);
  CHECK(t.nu == Mat{{Int(0), Int(0), Int(1)}});
}
