#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "occlab/errors.hpp"
#include "occlab/rng.hpp"

namespace occlab {

// One-sided stable law G_alpha, E[exp(-t G)] = exp(-t^alpha); alpha = 1 is the
// point mass at 1.
struct StableSpec {
  double alpha;
  explicit StableSpec(double a) : alpha(a) {
    if (!(a > 0.0 && a <= 1.0)) throw DomainError("StableSpec: alpha must lie in (0,1]");
  }
};

// Normalized Mittag-Leffler law Y_alpha = Gamma(1+alpha) G_alpha^{-alpha}.
struct MLSpec {
  double alpha;
  explicit MLSpec(double a) : alpha(a) {
    if (!(a > 0.0 && a <= 1.0)) throw DomainError("MLSpec: alpha must lie in (0,1]");
  }
  StableSpec stable() const { return StableSpec(alpha); }
};

namespace detail {

// log of Zolotarev's function
//   A(u) = sin(a u)^{a/(1-a)} sin((1-a) u) / sin(u)^{1/(1-a)},  u in (0, pi).
inline double log_zolotarev(double alpha, double u) {
  double s_au = std::sin(alpha * u);
  double s_bu = std::sin((1.0 - alpha) * u);
  double s_u = std::sin(u);
  return alpha / (1.0 - alpha) * std::log(s_au) + std::log(s_bu) -
         std::log(s_u) / (1.0 - alpha);
}

}  // namespace detail

// Kanter's representation: G = (A(U)/E)^{(1-alpha)/alpha}, U ~ Unif(0,pi),
// E ~ Exp(1). One uniform and one exponential per draw.
inline double sample_stable(const StableSpec& spec, Stream& rng) {
  if (spec.alpha == 1.0) return 1.0;
  const double a = spec.alpha;
  double u = std::numbers::pi * rng.uniform_open();
  double e = rng.exponential();
  return std::exp((1.0 - a) / a * (detail::log_zolotarev(a, u) - std::log(e)));
}

inline double sample_ml(const MLSpec& spec, Stream& rng) {
  if (spec.alpha == 1.0) return 1.0;
  double g = sample_stable(spec.stable(), rng);
  return std::tgamma(1.0 + spec.alpha) * std::pow(g, -spec.alpha);
}

// log E[Y^n] = log( n! Gamma(1+alpha)^n / Gamma(1+n alpha) ).
inline double log_ml_moment(const MLSpec& spec, unsigned n) {
  if (spec.alpha == 1.0 || n == 0) return 0.0;
  double nn = static_cast<double>(n);
  return std::lgamma(nn + 1.0) + nn * std::lgamma(1.0 + spec.alpha) -
         std::lgamma(1.0 + nn * spec.alpha);
}

// E[Y^n]; overflows to +inf for large n, use log_ml_moment there.
inline double ml_moment(const MLSpec& spec, unsigned n) { return std::exp(log_ml_moment(spec, n)); }

// P[G_alpha <= x] = (1/pi) int_0^pi exp(-A(u) x^{-alpha/(1-alpha)}) du.
inline double stable_cdf(const StableSpec& spec, double x) {
  if (spec.alpha == 1.0) return x >= 1.0 ? 1.0 : 0.0;
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double a = spec.alpha;
  const double log_scale = -a / (1.0 - a) * std::log(x);
  auto integrand = [a, log_scale](double u) {
    // Gauss-Kronrod nodes are interior, so sin(u) > 0 here.
    double l = detail::log_zolotarev(a, u) + log_scale;
    if (!(l < 700.0)) return 0.0;
    return std::exp(-std::exp(l));
  };
  // A(u) is increasing, so the integrand is a smooth decreasing step from 1
  // to 0. It equals 1 to double precision below level -37 and is below
  // 1e-23 above level 4; only the window in between is integrated.
  auto level_point = [&](double level) {
    double lo = 0.0, hi = std::numbers::pi;
    for (int i = 0; i < 80; ++i) {
      double mid = 0.5 * (lo + hi);
      if (detail::log_zolotarev(a, mid) + log_scale < level) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };
  const double u0 = level_point(-37.0), u1 = level_point(4.0);
  const double split = level_point(0.0);
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  double inner = 0.0;
  if (u1 > u0) {
    double m = std::clamp(split, u0, u1);
    if (m > u0) inner += Rule::integrate(integrand, u0, m, 10, 1e-10);
    if (u1 > m) inner += Rule::integrate(integrand, m, u1, 10, 1e-10);
  }
  return std::clamp((u0 + inner) / std::numbers::pi, 0.0, 1.0);
}

// P[Y_alpha <= y] = P[G_alpha >= (Gamma(1+alpha)/y)^{1/alpha}].
inline double ml_cdf(const MLSpec& spec, double y) {
  if (spec.alpha == 1.0) return y >= 1.0 ? 1.0 : 0.0;
  if (!(y > 0.0)) return 0.0;
  if (std::isinf(y)) return 1.0;
  double x = std::pow(std::tgamma(1.0 + spec.alpha) / y, 1.0 / spec.alpha);
  return 1.0 - stable_cdf(spec.stable(), x);
}

// Sorted sample.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DomainError("EmpiricalDistribution: empty sample");
    std::sort(values_.begin(), values_.end());
  }

  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }

  double quantile(double p) const {
    p = std::clamp(p, 0.0, 1.0);
    double pos = p * static_cast<double>(values_.size() - 1);
    auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= values_.size()) return values_.back();
    double w = pos - static_cast<double>(i);
    return values_[i] * (1.0 - w) + values_[i + 1] * w;
  }
  double median() const { return quantile(0.5); }

  // Fraction of sample points <= x.
  double cdf(double x) const {
    auto it = std::upper_bound(values_.begin(), values_.end(), x);
    return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
  }

  double mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }

 private:
  std::vector<double> values_;
};

// sup_x |F_N(x) - F(x)|, evaluated on both sides of every jump.
template <class Cdf>
double ks_statistic(const EmpiricalDistribution& emp, Cdf&& cdf) {
  const auto& v = emp.values();
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    double f = cdf(v[i]);
    d = std::max({d, std::abs(static_cast<double>(j) / n - f), std::abs(f - static_cast<double>(i) / n)});
    i = j;
  }
  return std::min(d, 1.0);
}

// Two-sample statistic sup_x |F_1(x) - F_2(x)|.
inline double ks_two_sample(const EmpiricalDistribution& x, const EmpiricalDistribution& y) {
  const auto& a = x.values();
  const auto& b = y.values();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == t) ++i;
    while (j < b.size() && b[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace occlab
