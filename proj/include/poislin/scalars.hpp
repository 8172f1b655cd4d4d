#ifndef POISLIN_SCALARS_HPP
#define POISLIN_SCALARS_HPP

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdlib>

namespace poislin {

// Exact-rational scalar for the zero-tolerance oracle mode.
using Rational = boost::multiprecision::cpp_rational;

template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  // Coefficients below this magnitude are dropped after every operation so
  // that sparse maps stay canonical for equality tests.
  static double drop_threshold() { return 1e-14; }
  static bool is_zero(double x) { return std::abs(x) <= drop_threshold(); }
  static double abs(double x) { return std::abs(x); }
  static double to_double(double x) { return x; }
  static double from_int(long v) { return static_cast<double>(v); }
};

template <>
struct ScalarTraits<Rational> {
  static constexpr bool exact = true;
  static bool is_zero(const Rational& x) { return x == 0; }
  static Rational abs(const Rational& x) { return x < 0 ? Rational(-x) : x; }
  static double to_double(const Rational& x) { return x.template convert_to<double>(); }
  static Rational from_int(long v) { return Rational(v); }
};

}  // namespace poislin

#endif
