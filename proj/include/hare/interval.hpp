#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "hare/errors.hpp"

namespace hare {

// Closed interval [lo, hi]. Used for rate intervals, declared variable
// ranges, and box coordinates alike.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  explicit Interval(double point) : lo(point), hi(point) {}
  Interval(double l, double h) : lo(l), hi(h) {}

  bool valid() const { return lo <= hi; }
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double x) const { return lo <= x && x <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
};

namespace detail {

// One ulp of outward slack per operation stands in for directed rounding, so
// that sampled point evaluations always land inside the computed enclosure.
inline double step_down(double x) {
  return std::nextafter(x, -std::numeric_limits<double>::infinity());
}
inline double step_up(double x) {
  return std::nextafter(x, std::numeric_limits<double>::infinity());
}
inline Interval widen(double lo, double hi) {
  return Interval(step_down(lo), step_up(hi));
}

}  // namespace detail

inline Interval operator+(const Interval& a, const Interval& b) {
  return detail::widen(a.lo + b.lo, a.hi + b.hi);
}

inline Interval operator-(const Interval& a, const Interval& b) {
  return detail::widen(a.lo - b.hi, a.hi - b.lo);
}

inline Interval operator-(const Interval& a) { return Interval(-a.hi, -a.lo); }

inline Interval operator*(const Interval& a, const Interval& b) {
  const double p1 = a.lo * b.lo, p2 = a.lo * b.hi;
  const double p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  return detail::widen(std::min(std::min(p1, p2), std::min(p3, p4)),
                       std::max(std::max(p1, p2), std::max(p3, p4)));
}

inline Interval operator/(const Interval& a, const Interval& b) {
  if (b.lo <= 0.0 && 0.0 <= b.hi)
    throw AbstractionError("interval division by an interval containing zero");
  const Interval inv = detail::widen(1.0 / b.hi, 1.0 / b.lo);
  return a * inv;
}

// x^n for integer n; negative exponents go through interval division.
inline Interval pow(const Interval& a, int n) {
  if (n == 0) return Interval(1.0, 1.0);
  if (n < 0) return Interval(1.0, 1.0) / pow(a, -n);
  if (n == 1) return a;
  const double plo = std::pow(a.lo, n), phi = std::pow(a.hi, n);
  if (n % 2 == 1) return detail::widen(plo, phi);
  if (a.lo <= 0.0 && 0.0 <= a.hi)
    return detail::widen(0.0, std::max(plo, phi));
  return detail::widen(std::min(plo, phi), std::max(plo, phi));
}

inline Interval exp(const Interval& a) {
  return detail::widen(std::exp(a.lo), std::exp(a.hi));
}

namespace detail {

// True iff some point c + 2*pi*k lies in [a, b].
inline bool hits_phase(double a, double b, double c) {
  const double two_pi = 2.0 * M_PI;
  const double k = std::ceil((a - c) / two_pi);
  return c + k * two_pi <= b;
}

}  // namespace detail

inline Interval sin(const Interval& a) {
  const double two_pi = 2.0 * M_PI;
  if (a.width() >= two_pi) return Interval(-1.0, 1.0);
  double lo = std::min(std::sin(a.lo), std::sin(a.hi));
  double hi = std::max(std::sin(a.lo), std::sin(a.hi));
  if (detail::hits_phase(a.lo, a.hi, M_PI / 2.0)) hi = 1.0;
  if (detail::hits_phase(a.lo, a.hi, -M_PI / 2.0)) lo = -1.0;
  Interval r = detail::widen(lo, hi);
  r.lo = std::max(r.lo, -1.0);
  r.hi = std::min(r.hi, 1.0);
  return r;
}

inline Interval cos(const Interval& a) {
  const double two_pi = 2.0 * M_PI;
  if (a.width() >= two_pi) return Interval(-1.0, 1.0);
  double lo = std::min(std::cos(a.lo), std::cos(a.hi));
  double hi = std::max(std::cos(a.lo), std::cos(a.hi));
  if (detail::hits_phase(a.lo, a.hi, 0.0)) hi = 1.0;
  if (detail::hits_phase(a.lo, a.hi, M_PI)) lo = -1.0;
  Interval r = detail::widen(lo, hi);
  r.lo = std::max(r.lo, -1.0);
  r.hi = std::min(r.hi, 1.0);
  return r;
}

inline Interval intersect(const Interval& a, const Interval& b) {
  return Interval(std::max(a.lo, b.lo), std::min(a.hi, b.hi));
}

}  // namespace hare
