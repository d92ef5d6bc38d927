#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "occlab/errors.hpp"

namespace occlab {

enum class Branch { left, right };

// x -> x^q for the cusp exponents q = 1 + p. Integer and half-integer
// exponents avoid std::pow; everything else falls back to it.
class CuspPower {
 public:
  CuspPower() = default;
  explicit CuspPower(double q) : q_(q) {
    if (q == 2.0) {
      kind_ = Kind::square;
    } else if (q == 3.0) {
      kind_ = Kind::cube;
    } else if (q == 4.0) {
      kind_ = Kind::fourth;
    } else if (q == 2.5) {
      kind_ = Kind::two_and_half;
    } else {
      kind_ = Kind::general;
    }
  }

  double exponent() const { return q_; }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::square:
        return x * x;
      case Kind::cube:
        return x * x * x;
      case Kind::fourth: {
        double s = x * x;
        return s * s;
      }
      case Kind::two_and_half:
        return x * x * std::sqrt(x);
      case Kind::general:
        break;
    }
    return std::pow(x, q_);
  }

 private:
  enum class Kind { square, cube, fourth, two_and_half, general };
  double q_ = 2.0;
  Kind kind_ = Kind::square;
};

// The built-in two-branch family
//   T(x) = x + a0 x^{1+p0}                 on [0, c]
//   T(x) = 1 - (1-x) - a1 (1-x)^{1+p1}     on (c, 1]
// with a0, a1 fixed by T(c-) = 1 and T(c+) = 0. The point x = c belongs to
// the left branch.
class MapParams {
 public:
  MapParams(double c, double p0, double p1) : c_(c), p0_(p0), p1_(p1) {
    if (!(c > 0.0 && c < 1.0)) throw DomainError("MapParams: c must lie in (0,1)");
    if (!(p0 >= 1.0) || !std::isfinite(p0)) throw DomainError("MapParams: p0 must be >= 1");
    if (!(p1 >= 1.0) || !std::isfinite(p1)) throw DomainError("MapParams: p1 must be >= 1");
    a0_ = (1.0 - c) / std::pow(c, 1.0 + p0);
    a1_ = c / std::pow(1.0 - c, 1.0 + p1);
    theta_plus_ = 1.0 / (1.0 + (1.0 + p1) * a1_ * std::pow(1.0 - c, p1));
    theta_minus_ = 1.0 / (1.0 + (1.0 + p0) * a0_ * std::pow(c, p0));
    power0_ = CuspPower(1.0 + p0);
    power1_ = CuspPower(1.0 + p1);
  }

  double c() const { return c_; }
  double p0() const { return p0_; }
  double p1() const { return p1_; }
  double a0() const { return a0_; }
  double a1() const { return a1_; }
  // 1/T'(c+) and 1/T'(c-).
  double theta_plus() const { return theta_plus_; }
  double theta_minus() const { return theta_minus_; }
  // Regular-variation indices of the two cusps: alpha = 1/p0, beta = 1/p1.
  double alpha() const { return std::min(1.0, 1.0 / p0_); }
  double beta() const { return std::min(1.0, 1.0 / p1_); }

  const CuspPower& power(Branch b) const { return b == Branch::left ? power0_ : power1_; }
  double coefficient(Branch b) const { return b == Branch::left ? a0_ : a1_; }
  // Length of the branch interval measured from its fixed point.
  double span(Branch b) const { return b == Branch::left ? c_ : 1.0 - c_; }

  friend bool operator==(const MapParams& x, const MapParams& y) {
    return x.c_ == y.c_ && x.p0_ == y.p0_ && x.p1_ == y.p1_;
  }

 private:
  double c_, p0_, p1_;
  double a0_ = 0, a1_ = 0, theta_plus_ = 0, theta_minus_ = 0;
  CuspPower power0_, power1_;
};

inline constexpr double tol_root = 1e-14;

// T(x). Domain error outside [0,1].
inline double evaluate_map(const MapParams& m, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("evaluate_map: x outside [0,1]");
  if (x <= m.c()) return x + m.a0() * m.power(Branch::left)(x);
  double d = 1.0 - x;
  return 1.0 - (d + m.a1() * m.power(Branch::right)(d));
}

// One-sided derivative T'(x); at x = c the left branch is used.
inline double map_derivative(const MapParams& m, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("map_derivative: x outside [0,1]");
  if (x <= m.c()) return 1.0 + (1.0 + m.p0()) * m.a0() * std::pow(x, m.p0());
  return 1.0 + (1.0 + m.p1()) * m.a1() * std::pow(1.0 - x, m.p1());
}

namespace detail {

// Solves g(d) = d + a d^q = target for d in [0, span], g increasing.
// Safeguarded Newton inside a shrinking bisection bracket.
inline double cusp_preimage(double a, const CuspPower& pw, double span, double target) {
  if (target <= 0.0) return 0.0;
  auto g = [&](double d) { return d + a * pw(d); };
  double lo = 0.0, hi = std::min(span, target);
  if (g(hi) <= target) return hi;
  double q = pw.exponent();
  double x = target - a * pw(target);
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  constexpr int budget = 200;
  for (int it = 0; it < budget; ++it) {
    double r = g(x) - target;
    if (r == 0.0) return x;
    if (r > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    double slope = 1.0 + a * q * pw(x) / x;
    double next = x - r / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x || hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * hi) {
      x = next;
      break;
    }
    x = next;
  }
  double residual = std::abs(g(x) - target);
  if (residual > tol_root) throw ConvergenceError("inverse branch: root finder did not reach tol_root");
  return x;
}

}  // namespace detail

// f0(y) in [0,c] or f1(y) in [c,1].
inline double inverse_branch(const MapParams& m, Branch side, double y) {
  if (!(y >= 0.0 && y <= 1.0)) throw DomainError("inverse_branch: y outside [0,1]");
  if (side == Branch::left) {
    return detail::cusp_preimage(m.a0(), m.power(Branch::left), m.c(), y);
  }
  double d = detail::cusp_preimage(m.a1(), m.power(Branch::right), 1.0 - m.c(), 1.0 - y);
  return 1.0 - d;
}

// u_k = f0^k(1) and v_k = 1 - f1^k(0), k < n, with partial sums.
// U[m] = sum_{k<m} u_k for m = 0..n (so U has n+1 entries), same for V.
struct IterateTable {
  std::vector<double> u, v, U, V;
  std::size_t size() const { return u.size(); }

  double U_at(std::size_t m) const { return U.at(m); }
  double V_at(std::size_t m) const { return V.at(m); }

  // Columns k, u_k, v_k, U_k, V_k where U_k, V_k are cumulative through k.
  void write_csv(std::ostream& os) const {
    os << "k,u_k,v_k,U_k,V_k\n";
    os.precision(17);
    for (std::size_t k = 0; k < u.size(); ++k)
      os << k << ',' << u[k] << ',' << v[k] << ',' << U[k + 1] << ',' << V[k + 1] << '\n';
  }
};

inline constexpr double iterate_underflow = 1e-300;

inline IterateTable iterate_table(const MapParams& m, std::size_t n) {
  if (n < 1) throw DomainError("iterate_table: n must be >= 1");
  IterateTable t;
  t.u.resize(n);
  t.v.resize(n);
  t.U.assign(n + 1, 0.0);
  t.V.assign(n + 1, 0.0);
  // In distance-from-fixed-point coordinates both sequences obey the same
  // recursion d_{k+1} = g^{-1}(d_k) with g(d) = d + a d^{1+p}.
  auto fill = [n](std::vector<double>& seq, std::vector<double>& sums, double a,
                  const CuspPower& pw, double span) {
    double d = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      seq[k] = d;
      sums[k + 1] = sums[k] + d;
      if (d == 0.0) continue;
      double next = detail::cusp_preimage(a, pw, span, d);
      d = next < iterate_underflow ? 0.0 : next;
    }
  };
  fill(t.u, t.U, m.a0(), m.power(Branch::left), m.c());
  fill(t.v, t.V, m.a1(), m.power(Branch::right), 1.0 - m.c());
  return t;
}

// An increasing function on [0, kappa] with 0 <= f(x) < x on (0, kappa] and
// f'(0) = 1, the comparison objects for partial sums of iterates.
class FixedPointFunction {
 public:
  FixedPointFunction(std::function<double(double)> f, double kappa, std::string label = {})
      : f_(std::move(f)), kappa_(kappa), label_(std::move(label)) {
    if (!(kappa > 0.0)) throw DomainError("FixedPointFunction: kappa must be positive");
    validate();
  }

  // f(x) = x - b x^q.
  static FixedPointFunction power_rule(double b, double q, double kappa) {
    if (!(b > 0.0) || !(q > 1.0)) throw DomainError("power_rule: need b > 0 and q > 1");
    return FixedPointFunction([b, q](double x) { return x - b * std::pow(x, q); }, kappa,
                              "x - " + std::to_string(b) + " x^" + std::to_string(q));
  }

  // The inverse branch of the map at the fixed point of the given side,
  // written in distance-from-fixed-point coordinates (f0 itself on the left,
  // x -> 1 - f1(1 - x) on the right).
  static FixedPointFunction from_branch(const MapParams& m, Branch side) {
    double span = m.span(side);
    double a = m.coefficient(side);
    CuspPower pw = m.power(side);
    return FixedPointFunction(
        [a, pw, span](double x) { return detail::cusp_preimage(a, pw, span, x); }, 1.0,
        side == Branch::left ? "f0" : "1 - f1(1 - x)");
  }

  double operator()(double x) const { return f_(x); }
  double kappa() const { return kappa_; }
  const std::string& label() const { return label_; }

 private:
  // Monotonicity is required on [0, max f], where every iterate after the
  // first lies; f itself only has to map (0, kappa] below the diagonal.
  void validate() const {
    if (f_(0.0) != 0.0) throw DomainError("FixedPointFunction: f(0) must be 0");
    constexpr int grid = 1000;
    double top = 0.0;
    for (int i = 1; i <= grid; ++i) {
      double x = kappa_ * i / grid;
      double y = f_(x);
      if (!(y < x) || y < 0.0) throw DomainError("FixedPointFunction: need 0 <= f(x) < x on (0,kappa]");
      top = std::max(top, y);
    }
    double prev = 0.0;
    for (int i = 1; i <= grid; ++i) {
      double x = top * i / grid;
      double y = f_(x);
      if (y < prev) throw DomainError("FixedPointFunction: f must be increasing on [0, max f]");
      prev = y;
    }
  }

  std::function<double(double)> f_;
  double kappa_;
  std::string label_;
};

// ratio[m-1] = sum_{j<m} g^j(kappa) / sum_{j<m} f^j(kappa), m = 1..n.
// Iterates below the underflow guard contribute zero.
inline std::vector<double> compare_partial_sums(const FixedPointFunction& f,
                                                const FixedPointFunction& g, double kappa,
                                                std::size_t n) {
  if (!(kappa > 0.0) || kappa > f.kappa() || kappa > g.kappa())
    throw DomainError("compare_partial_sums: kappa outside the common domain");
  std::vector<double> ratio(n);
  double xf = kappa, xg = kappa, sf = 0.0, sg = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    sf += xf;
    sg += xg;
    ratio[m] = sg / sf;
    if (xf != 0.0) {
      xf = f(xf);
      if (xf < iterate_underflow) xf = 0.0;
    }
    if (xg != 0.0) {
      xg = g(xg);
      if (xg < iterate_underflow) xg = 0.0;
    }
  }
  return ratio;
}

}  // namespace occlab
