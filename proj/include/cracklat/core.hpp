#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cracklat {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

using Vec = std::vector<Int>;
using QVec = std::vector<Rat>;
using Mat = std::vector<Vec>;
using QMat = std::vector<QVec>;

// Invalid user-supplied data or violated operation precondition (CLI exit 1).
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two independently computed sides of a theorem disagree.  This is always an
// implementation bug, never a mathematical discovery (CLI exit 2).
struct theorem_violation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Int dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw input_error("dot: dimension mismatch");
  Int s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Rat dot(const Vec& a, const QVec& b) {
  if (a.size() != b.size()) throw input_error("dot: dimension mismatch");
  Rat s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += Rat(a[i]) * b[i];
  return s;
}

inline Rat dot(const QVec& a, const QVec& b) {
  if (a.size() != b.size()) throw input_error("dot: dimension mismatch");
  Rat s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Vec vec_add(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw input_error("vec_add: dimension mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec vec_sub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw input_error("vec_sub: dimension mismatch");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec vec_neg(const Vec& a) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
  return r;
}

inline Vec vec_scale(const Int& c, const Vec& a) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
  return r;
}

inline QVec qvec_add(const QVec& a, const QVec& b) {
  if (a.size() != b.size()) throw input_error("qvec_add: dimension mismatch");
  QVec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline QVec qvec_sub(const QVec& a, const QVec& b) {
  if (a.size() != b.size()) throw input_error("qvec_sub: dimension mismatch");
  QVec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline QVec qvec_scale(const Rat& c, const QVec& a) {
  QVec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = c * a[i];
  return r;
}

inline bool is_zero(const Vec& v) {
  return std::all_of(v.begin(), v.end(), [](const Int& x) { return x == 0; });
}

inline bool is_zero(const QVec& v) {
  return std::all_of(v.begin(), v.end(), [](const Rat& x) { return x == 0; });
}

inline Vec zero_vec(std::size_t n) { return Vec(n, Int(0)); }
inline QVec zero_qvec(std::size_t n) { return QVec(n, Rat(0)); }

inline QVec to_q(const Vec& v) {
  QVec r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = Rat(v[i]);
  return r;
}

inline QMat to_q(const Mat& a) {
  QMat r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = to_q(a[i]);
  return r;
}

inline bool is_integral(const Rat& x) { return denominator(x) == 1; }

inline bool is_integral(const QVec& v) {
  return std::all_of(v.begin(), v.end(),
                     [](const Rat& x) { return is_integral(x); });
}

inline Int to_int(const Rat& x) {
  if (!is_integral(x)) throw input_error("to_int: non-integral rational");
  return numerator(x);
}

inline Vec to_int(const QVec& v) {
  Vec r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = to_int(v[i]);
  return r;
}

// Clears denominators: smallest positive multiplier making v integral.
inline Vec clear_denominators(const QVec& v, Int* multiplier = nullptr) {
  Int m = 1;
  for (const Rat& x : v) m = boost::multiprecision::lcm(m, Int(denominator(x)));
  Vec r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    r[i] = Int(numerator(v[i])) * (m / Int(denominator(v[i])));
  if (multiplier) *multiplier = m;
  return r;
}

template <typename V>
std::string str(const V& v) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    os << v[i];
  }
  os << ")";
  return os.str();
}

}  // namespace cracklat
