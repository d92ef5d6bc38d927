#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "occlab/errors.hpp"
#include "occlab/maps.hpp"
#include "occlab/rng.hpp"

namespace occlab {

namespace detail {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// log(e^a - e^b) for a >= b.
inline double log_diff_exp(double a, double b) {
  if (b == neg_inf) return a;
  if (b >= a) return neg_inf;
  return a + std::log(-std::expm1(b - a));
}

inline double log_sum_exp(double a, double b) {
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double gamma_product(double alpha) { return std::tgamma(2.0 - alpha) * std::tgamma(1.0 + alpha); }

}  // namespace detail

// A nondecreasing positive function tabulated in log-log coordinates and
// interpolated linearly there, which is exact for power laws and
// asymptotically exact for regularly varying functions.
class LogTable {
 public:
  LogTable(std::vector<double> log_x, std::vector<double> log_y)
      : log_x_(std::move(log_x)), log_y_(std::move(log_y)) {
    if (log_x_.size() != log_y_.size() || log_x_.size() < 2)
      throw DomainError("LogTable: need at least two matching points");
    for (std::size_t i = 0; i < log_x_.size(); ++i) {
      if (!std::isfinite(log_x_[i]) || !std::isfinite(log_y_[i]))
        throw DomainError("LogTable: nonfinite or nonpositive entry");
      if (i > 0 && !(log_x_[i] > log_x_[i - 1])) throw DomainError("LogTable: grid must increase strictly");
      if (i > 0 && log_y_[i] < log_y_[i - 1]) throw ConcavityError("LogTable: values must be nondecreasing");
    }
  }

  static LogTable from_values(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DomainError("LogTable: size mismatch");
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("LogTable: values must be positive");
      lx[i] = std::log(x[i]);
      ly[i] = std::log(y[i]);
    }
    return LogTable(std::move(lx), std::move(ly));
  }

  // f sampled at `points` log-spaced abscissae in [x_lo, x_hi].
  template <class F>
  static LogTable tabulate(F&& f, double x_lo, double x_hi, std::size_t points) {
    if (!(x_lo > 0.0) || !(x_hi > x_lo) || points < 2) throw DomainError("LogTable::tabulate: bad range");
    std::vector<double> lx(points), ly(points);
    double a = std::log(x_lo), b = std::log(x_hi);
    for (std::size_t i = 0; i < points; ++i) {
      lx[i] = i + 1 == points ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
      double y = f(std::exp(lx[i]));
      if (!(y > 0.0)) throw DomainError("LogTable::tabulate: function must be positive");
      ly[i] = std::log(y);
    }
    return LogTable(std::move(lx), std::move(ly));
  }

  std::size_t size() const { return log_x_.size(); }
  const std::vector<double>& log_x() const { return log_x_; }
  const std::vector<double>& log_y() const { return log_y_; }
  double log_x_min() const { return log_x_.front(); }
  double log_x_max() const { return log_x_.back(); }
  double log_y_min() const { return log_y_.front(); }
  double log_y_max() const { return log_y_.back(); }

  double log_eval(double lx) const {
    constexpr double slack = 1e-12;
    if (!(lx >= log_x_.front() - slack * (1.0 + std::abs(log_x_.front()))) ||
        !(lx <= log_x_.back() + slack * (1.0 + std::abs(log_x_.back()))))
      throw OutOfRangeError("LogTable: abscissa outside the tabulated range");
    lx = std::clamp(lx, log_x_.front(), log_x_.back());
    auto it = std::upper_bound(log_x_.begin(), log_x_.end(), lx);
    std::size_t i = it == log_x_.end() ? log_x_.size() - 1 : static_cast<std::size_t>(it - log_x_.begin());
    if (i == 0) i = 1;
    double w = (lx - log_x_[i - 1]) / (log_x_[i] - log_x_[i - 1]);
    return log_y_[i - 1] + w * (log_y_[i] - log_y_[i - 1]);
  }

  double eval(double x) const { return std::exp(log_eval(std::log(x))); }

  // Smallest abscissa whose interpolated value equals exp(ly).
  double log_inverse(double ly) const {
    constexpr double slack = 1e-12;
    if (!(ly >= log_y_.front() - slack * (1.0 + std::abs(log_y_.front()))) ||
        !(ly <= log_y_.back() + slack * (1.0 + std::abs(log_y_.back()))))
      throw OutOfRangeError("asymptotic_inverse: value outside the tabulated range");
    ly = std::clamp(ly, log_y_.front(), log_y_.back());
    auto it = std::lower_bound(log_y_.begin(), log_y_.end(), ly);
    auto i = static_cast<std::size_t>(it - log_y_.begin());
    if (i == 0) return log_x_.front();
    double dy = log_y_[i] - log_y_[i - 1];
    double w = dy > 0.0 ? (ly - log_y_[i - 1]) / dy : 1.0;
    return log_x_[i - 1] + w * (log_x_[i] - log_x_[i - 1]);
  }

  double inverse(double y) const { return std::exp(log_inverse(std::log(y))); }

 private:
  std::vector<double> log_x_, log_y_;
};

// t with f(t) = y on the table; out-of-range error beyond the tabulated values.
inline double asymptotic_inverse(const LogTable& f, double y) {
  if (!(y > 0.0)) throw OutOfRangeError("asymptotic_inverse: y must be positive");
  return f.inverse(y);
}

// Log-log slope of the table over its top decade (index diagnostic only).
inline double empirical_index(const LogTable& f) {
  double top = f.log_x_max();
  double start = std::max(f.log_x_min(), top - std::log(10.0));
  if (!(top > start)) return 0.0;
  return (f.log_eval(top) - f.log_eval(start)) / (top - start);
}

// t -> L(t) = E[phi ^ t] (times the mass of the carrying set), tabulated.
// Construction enforces: L nondecreasing, concave, L(t)/t nonincreasing.
class TruncatedExpectation {
 public:
  TruncatedExpectation(LogTable table, double mass = 1.0) : table_(std::move(table)), mass_(mass) {
    if (!(mass > 0.0)) throw DomainError("TruncatedExpectation: mass must be positive");
    validate();
  }

  static TruncatedExpectation from_values(const std::vector<double>& t, const std::vector<double>& L,
                                          double mass = 1.0) {
    return TruncatedExpectation(LogTable::from_values(t, L), mass);
  }

  template <class F>
  static TruncatedExpectation tabulate(F&& L, double t_lo, double t_hi, std::size_t points,
                                       double mass = 1.0) {
    return TruncatedExpectation(LogTable::tabulate(std::forward<F>(L), t_lo, t_hi, points), mass);
  }

  const LogTable& table() const { return table_; }
  double mass() const { return mass_; }
  std::size_t size() const { return table_.size(); }
  double log_value(double log_t) const { return table_.log_eval(log_t); }
  double value(double t) const { return table_.eval(t); }

  void write_csv(std::ostream& os) const {
    os << "t,L,log_t,log_L\n";
    os.precision(17);
    for (std::size_t i = 0; i < table_.size(); ++i)
      os << std::exp(table_.log_x()[i]) << ',' << std::exp(table_.log_y()[i]) << ',' << table_.log_x()[i]
         << ',' << table_.log_y()[i] << '\n';
  }

 private:
  void validate() const {
    const auto& lt = table_.log_x();
    const auto& lL = table_.log_y();
    constexpr double rel = 1e-9;
    const double log_eps = std::log(8.0 * std::numeric_limits<double>::epsilon());
    for (std::size_t i = 0; i + 1 < lt.size(); ++i) {
      if (lL[i + 1] - lt[i + 1] > lL[i] - lt[i] + rel)
        throw ConcavityError("TruncatedExpectation: L(t)/t must be nonincreasing");
    }
    // Concavity: chord slopes nonincreasing, compared in log space with an
    // allowance for cancellation in L_{i+1} - L_i.
    auto log_slope = [&](std::size_t i) {
      return detail::log_diff_exp(lL[i + 1], lL[i]) - detail::log_diff_exp(lt[i + 1], lt[i]);
    };
    auto log_slack = [&](std::size_t i) {
      return log_eps + lL[i + 1] - detail::log_diff_exp(lt[i + 1], lt[i]);
    };
    for (std::size_t i = 0; i + 2 < lt.size(); ++i) {
      double here = log_slope(i), next = log_slope(i + 1);
      double bound = detail::log_sum_exp(here + std::log1p(rel), detail::log_sum_exp(log_slack(i), log_slack(i + 1)));
      if (next > bound) throw ConcavityError("TruncatedExpectation: L must be concave");
    }
  }

  LogTable table_;
  double mass_;
};

// c(n) on a grid of n values, held in log form.
struct NormalizingSequence {
  std::vector<double> log_n, log_c;
  double alpha = 1.0;

  std::size_t size() const { return log_n.size(); }
  double n(std::size_t i) const { return std::exp(log_n[i]); }
  double c(std::size_t i) const { return std::exp(log_c[i]); }
  double ratio(std::size_t i) const { return std::exp(log_c[i] - log_n[i]); }

  // c at an exact grid value of n (relative match 1e-12).
  double at(double n_value) const {
    double l = std::log(n_value);
    for (std::size_t i = 0; i < log_n.size(); ++i)
      if (std::abs(log_n[i] - l) <= 1e-12 * (1.0 + std::abs(l))) return c(i);
    throw OutOfRangeError("NormalizingSequence: n not on the grid");
  }

  void validate() const {
    constexpr double tol = 1e-9;
    for (std::size_t i = 0; i < log_n.size(); ++i) {
      if (i > 0 && !(log_n[i] > log_n[i - 1])) throw DomainError("NormalizingSequence: grid must increase");
      if (i > 0 && log_c[i] < log_c[i - 1] - tol) throw ConcavityError("NormalizingSequence: c must increase");
      if (log_c[i] - log_n[i] > tol) throw DomainError("NormalizingSequence: c(n) exceeds n");
    }
  }

  void write_csv(std::ostream& os) const {
    os << "n,c_n,c_over_n,log_n,log_c_n\n";
    os.precision(17);
    for (std::size_t i = 0; i < size(); ++i)
      os << n(i) << ',' << c(i) << ',' << ratio(i) << ',' << log_n[i] << ',' << log_c[i] << '\n';
  }
};

// c(t) = a~^{-1}( t / (G [sum_{k<t} theta+ u_k + theta- v_k]) ) with
// a~(t) = t / (theta- V_t) and G = Gamma(2-alpha) Gamma(1+alpha).
inline NormalizingSequence normalizing_sequence_cusps(const MapParams& m, const IterateTable& table,
                                                      const std::vector<double>& grid) {
  if (m.p1() != 1.0)
    throw HypothesisError("normalizing_sequence_cusps: requires a barely infinite right cusp (p1 = 1)");
  const double alpha = 1.0 / m.p0();
  const double log_g = std::log(detail::gamma_product(alpha));
  const std::size_t N = table.size();
  std::vector<double> lx(N), ly(N);
  for (std::size_t t = 1; t <= N; ++t) {
    lx[t - 1] = std::log(static_cast<double>(t));
    ly[t - 1] = lx[t - 1] - std::log(m.theta_minus() * table.V[t]);
  }
  LogTable a_tilde(std::move(lx), std::move(ly));

  NormalizingSequence out;
  out.alpha = alpha;
  for (double n : grid) {
    auto t = static_cast<std::size_t>(std::floor(n));
    if (t < 1 || t > N) throw OutOfRangeError("normalizing_sequence_cusps: grid beyond the iterate table");
    double s = m.theta_plus() * table.U[t] + m.theta_minus() * table.V[t];
    double log_y = std::log(n) - log_g - std::log(s);
    out.log_n.push_back(std::log(n));
    out.log_c.push_back(a_tilde.log_inverse(log_y));
  }
  out.validate();
  return out;
}

// c(t) = a_B^{-1}( t / (G (L_A(t) + L_B(t))) ),  a_B(t) = t / L_B(t),
// evaluated on a grid given in log t.
inline NormalizingSequence normalizing_sequence_abstract_log(const TruncatedExpectation& LA,
                                                             const TruncatedExpectation& LB, double alpha,
                                                             const std::vector<double>& log_grid) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("normalizing_sequence_abstract: alpha in (0,1]");
  const double log_g = std::log(detail::gamma_product(alpha));
  const auto& lt = LB.table().log_x();
  const auto& lL = LB.table().log_y();
  std::vector<double> la(lt.size());
  // t/L(t) is nondecreasing; the running max removes rounding jitter on flat stretches of L.
  for (std::size_t i = 0; i < lt.size(); ++i) {
    la[i] = lt[i] - lL[i];
    if (i > 0) la[i] = std::max(la[i], la[i - 1]);
  }
  LogTable a_B(lt, std::move(la));

  NormalizingSequence out;
  out.alpha = alpha;
  for (double s : log_grid) {
    double log_sum = detail::log_sum_exp(LA.log_value(s), LB.log_value(s));
    double log_y = s - log_g - log_sum;
    out.log_n.push_back(s);
    out.log_c.push_back(a_B.log_inverse(log_y));
  }
  out.validate();
  return out;
}

inline NormalizingSequence normalizing_sequence_abstract(const TruncatedExpectation& LA,
                                                         const TruncatedExpectation& LB, double alpha,
                                                         const std::vector<double>& grid) {
  std::vector<double> lg(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw DomainError("normalizing_sequence_abstract: grid must be positive");
    lg[i] = std::log(grid[i]);
  }
  return normalizing_sequence_abstract_log(LA, LB, alpha, lg);
}

// L_A, L_B of the form exp( int_1^t eps(y)/y dy ) with eps piecewise constant
// on [t_m, t_{m+1}). Breakpoints are held as log t, so
// log L is piecewise linear in log t and can be evaluated exactly far beyond
// the range of double.
class OscillatingPair {
 public:
  // Interval m (1-based) is [t_m, t_{m+1}); the last interval is unbounded.
  OscillatingPair(std::vector<double> log_breakpoints, std::vector<double> k_a, std::vector<double> k_b)
      : log_t_(std::move(log_breakpoints)), k_a_(std::move(k_a)), k_b_(std::move(k_b)) {
    if (log_t_.empty() || log_t_.front() != 0.0) throw DomainError("OscillatingPair: t_1 must be 1");
    if (k_a_.size() != log_t_.size() || k_b_.size() != log_t_.size())
      throw DomainError("OscillatingPair: one K value per interval");
    for (std::size_t i = 0; i < log_t_.size(); ++i) {
      if (i > 0 && !(log_t_[i] > log_t_[i - 1])) throw DomainError("OscillatingPair: breakpoints must increase");
      if (!(k_a_[i] > 0.0 && k_a_[i] < 1.0) || !(k_b_[i] > 0.0 && k_b_[i] < 1.0))
        throw DomainError("OscillatingPair: K values must lie in (0,1)");
      if (i > 0 && (k_a_[i] > k_a_[i - 1] || k_b_[i] > k_b_[i - 1]))
        throw ConcavityError("OscillatingPair: K values must be nonincreasing");
    }
    cum_a_.assign(log_t_.size(), 0.0);
    cum_b_.assign(log_t_.size(), 0.0);
    for (std::size_t i = 1; i < log_t_.size(); ++i) {
      cum_a_[i] = cum_a_[i - 1] + k_a_[i - 1] * (log_t_[i] - log_t_[i - 1]);
      cum_b_[i] = cum_b_[i - 1] + k_b_[i - 1] * (log_t_[i] - log_t_[i - 1]);
    }
  }

  // K_A(2n) = K_A(2n+1) = 1/(2n+2);  K_B(2n+1) = K_B(2n+2) = 1/(2n+3).
  static double construction_K_A(int m) { return 1.0 / (2.0 * (m / 2) + 2.0); }
  static double construction_K_B(int m) {
    if (m < 1) throw DomainError("K_B is defined for m >= 1");
    return 1.0 / (2.0 * ((m - 1) / 2) + 3.0);
  }

  // Number of breakpoints t_1, ..., t_M.
  std::size_t breakpoints() const { return log_t_.size(); }
  // log t_m, 1-based.
  double log_t(std::size_t m) const { return log_t_.at(m - 1); }
  double K_A(std::size_t m) const { return k_a_.at(m - 1); }
  double K_B(std::size_t m) const { return k_b_.at(m - 1); }
  // Completed induction levels n (t_{2n+2} constructed).
  int levels() const { return static_cast<int>(log_t_.size() / 2) - 1; }

  double log_L_A(double s) const { return log_L(s, k_a_, cum_a_); }
  double log_L_B(double s) const { return log_L(s, k_b_, cum_b_); }

  // log grid through the breakpoints with `per_interval` points per interval,
  // extended by `tail` times the last interval length.
  std::vector<double> breakpoint_grid(std::size_t per_interval, double extend = 0.0) const {
    std::vector<double> g;
    for (std::size_t i = 0; i + 1 < log_t_.size(); ++i)
      for (std::size_t j = 0; j < per_interval; ++j)
        g.push_back(log_t_[i] + (log_t_[i + 1] - log_t_[i]) * static_cast<double>(j) / per_interval);
    g.push_back(log_t_.back());
    if (extend > 0.0 && log_t_.size() >= 2) {
      double len = extend * (log_t_.back() - log_t_[log_t_.size() - 2]);
      for (std::size_t j = 1; j <= per_interval; ++j) g.push_back(log_t_.back() + len * j / per_interval);
    }
    return g;
  }

  TruncatedExpectation L_A(const std::vector<double>& log_grid) const { return tabulate(log_grid, true); }
  TruncatedExpectation L_B(const std::vector<double>& log_grid) const { return tabulate(log_grid, false); }

  // Columns n, t_n, log_t_n, K_A, K_B, L_A, L_B, log_L_A, log_L_B; entries
  // beyond the range of double print as inf.
  void write_csv(std::ostream& os) const {
    os << "n,t_n,log_t_n,K_A,K_B,L_A,L_B,log_L_A,log_L_B\n";
    os.precision(17);
    for (std::size_t i = 0; i < log_t_.size(); ++i)
      os << i + 1 << ',' << std::exp(log_t_[i]) << ',' << log_t_[i] << ',' << k_a_[i] << ',' << k_b_[i] << ','
         << std::exp(cum_a_[i]) << ',' << std::exp(cum_b_[i]) << ',' << cum_a_[i] << ',' << cum_b_[i] << '\n';
  }

 private:
  static double log_L(double s, const std::vector<double>& k, const std::vector<double>& cum,
                      const std::vector<double>& lt) {
    if (s < 0.0) throw DomainError("OscillatingPair: defined for t >= 1");
    auto it = std::upper_bound(lt.begin(), lt.end(), s);
    auto i = static_cast<std::size_t>(it - lt.begin()) - 1;
    return cum[i] + k[i] * (s - lt[i]);
  }
  double log_L(double s, const std::vector<double>& k, const std::vector<double>& cum) const {
    return log_L(s, k, cum, log_t_);
  }

  TruncatedExpectation tabulate(const std::vector<double>& log_grid, bool a_side) const {
    std::vector<double> ly(log_grid.size());
    for (std::size_t i = 0; i < log_grid.size(); ++i) ly[i] = a_side ? log_L_A(log_grid[i]) : log_L_B(log_grid[i]);
    return TruncatedExpectation(LogTable(log_grid, std::move(ly)));
  }

  std::vector<double> log_t_, k_a_, k_b_, cum_a_, cum_b_;
};

// Builds t_1 = 1 < t_2 < ... < t_{2 levels + 2} so that for each n
//   L_A(t_{2n+2}) >= n L_B(t_{2n+2})      and    L_A(t_{2n+1}) <= L_B(t_{2n+1}) / n.
// Each breakpoint is the first point, found by doubling the log-offset and
// then bisecting, where the inequality holds on the current interval's power
// laws; t at least doubles between breakpoints.
inline OscillatingPair construct_oscillating_pair(int levels,
                                                  double max_log_t = std::numeric_limits<double>::max()) {
  if (levels < 2) throw DomainError("construct_oscillating_pair: levels must be >= 2");
  const int count = 2 * levels + 2;
  std::vector<double> lt{0.0}, ka{OscillatingPair::construction_K_A(1)}, kb{OscillatingPair::construction_K_B(1)};
  double log_ratio = 0.0;  // log L_A(t_m) - log L_B(t_m)
  for (int m = 1; m < count; ++m) {
    const double sigma = lt.back();
    const double slope = ka.back() - kb.back();
    const bool dominate_a = m % 2 == 1;
    const double n = dominate_a ? (m - 1) / 2 : m / 2;
    const double target = n == 0.0 ? detail::neg_inf : std::log(n);
    auto ratio_at = [&](double s) { return log_ratio + slope * (s - sigma); };
    auto holds = [&](double s) { return dominate_a ? ratio_at(s) >= target : ratio_at(s) <= -target; };

    double step = std::log(2.0);
    double lo = sigma, hi = sigma + step;
    while (!holds(hi)) {
      lo = hi;
      step *= 2.0;
      hi = sigma + step;
      if (!(hi <= max_log_t) || !std::isfinite(hi))
        throw OverflowError("construct_oscillating_pair: breakpoint beyond representable range",
                            std::max(0, (m - 1) / 2 - 1 + (m % 2 == 0 ? 0 : 0)));
    }
    if (lo > sigma) {
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (holds(mid)) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
    }
    log_ratio = ratio_at(hi);
    lt.push_back(hi);
    ka.push_back(OscillatingPair::construction_K_A(m + 1));
    kb.push_back(OscillatingPair::construction_K_B(m + 1));
  }
  return OscillatingPair(std::move(lt), std::move(ka), std::move(kb));
}

struct OscillationExtremes {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;
};

// Extremes of c(n)/n for the alpha = 1 normalizing sequence built from the
// pair. Grid points whose target t/(L_A+L_B) lies below a_B(1) = 1 are
// skipped and counted.
inline OscillationExtremes oscillation_check(const OscillatingPair& pair, const std::vector<double>& log_grid) {
  std::vector<double> table_grid = log_grid;
  table_grid.insert(table_grid.end(), {0.0});
  for (std::size_t m = 1; m <= pair.breakpoints(); ++m) table_grid.push_back(pair.log_t(m));
  std::sort(table_grid.begin(), table_grid.end());
  table_grid.erase(std::unique(table_grid.begin(), table_grid.end()), table_grid.end());
  while (table_grid.size() > 1 && table_grid.back() > log_grid.back()) table_grid.pop_back();
  if (table_grid.size() < 2) throw DomainError("oscillation_check: grid too short");

  auto LA = pair.L_A(table_grid);
  auto LB = pair.L_B(table_grid);
  OscillationExtremes out;
  out.min_ratio = std::numeric_limits<double>::infinity();
  out.max_ratio = -std::numeric_limits<double>::infinity();
  for (double s : log_grid) {
    double log_y = s - detail::log_sum_exp(pair.log_L_A(s), pair.log_L_B(s));
    if (log_y < 0.0) {
      ++out.skipped;
      continue;
    }
    auto seq = normalizing_sequence_abstract_log(LA, LB, 1.0, {s});
    double r = seq.ratio(0);
    out.min_ratio = std::min(out.min_ratio, r);
    out.max_ratio = std::max(out.max_ratio, r);
    ++out.evaluated;
  }
  return out;
}

// b*(t) = b(t / log log t) log log t and its inverse a*.
class LilNormalizer {
 public:
  LilNormalizer(const LogTable& b, const std::vector<double>& grid) {
    if (grid.size() < 2) throw DomainError("lil_normalizer: need at least two grid points");
    std::vector<double> lx, ly;
    for (double t : grid) {
      if (!(t > std::exp(std::numbers::e))) throw DomainError("lil_normalizer: grid must start above e^e");
      double ll = std::log(std::log(t));
      lx.push_back(std::log(t));
      ly.push_back(b.log_eval(std::log(t) - std::log(ll)) + std::log(ll));
    }
    b_star_ = std::make_unique<LogTable>(std::move(lx), std::move(ly));
  }

  double b_star(double t) const { return b_star_->eval(t); }
  double a_star(double y) const { return asymptotic_inverse(*b_star_, y); }
  const LogTable& table() const { return *b_star_; }

 private:
  std::unique_ptr<LogTable> b_star_;
};

inline LilNormalizer lil_normalizer(const LogTable& b, const std::vector<double>& grid) {
  return LilNormalizer(b, grid);
}

// ---------------------------------------------------------------------------
// Discrete heavy tails

// Behaviour of P[phi > k] beyond the tabulated head.
class TailModel {
 public:
  virtual ~TailModel() = default;
  // P[phi > k], k beyond the head.
  virtual double tail(double k) const = 0;
  // sum_{k0 <= k < t} P[phi > k] for integers k0 <= t beyond the head.
  virtual double partial_sum(double k0, double t) const = 0;
  // Smallest integer k >= k_min with P[phi > k] < u.
  virtual double inverse(double u, double k_min) const {
    double lo = k_min, step = 1.0;
    if (tail(lo) < u) return lo;
    double hi = lo + step;
    while (tail(hi) >= u) {
      lo = hi;
      step *= 2.0;
      hi = k_min + step;
      if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
    }
    while (hi - lo > 1.0) {
      double mid = std::floor(0.5 * (lo + hi));
      if (mid <= lo) break;
      if (tail(mid) < u) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return hi;
  }
};

// pmf weights w(n) = n^{-(1+alpha)} (log(n+e))^{-beta} (log log(n+e^e))^{-gamma},
// n >= 1. The shifts keep the log factors >= 1 and leave the asymptotics
// n^{-(1+alpha)} (log n)^{-beta} (log log n)^{-gamma} unchanged.
struct PowerLogFamily {
  double alpha = 1.0;
  double beta = 0.0;
  double gamma = 0.0;

  double log_weight(double x) const {
    double l = -(1.0 + alpha) * std::log(x);
    if (beta != 0.0) l -= beta * std::log(std::log(x + std::numbers::e));
    if (gamma != 0.0) l -= gamma * std::log(std::log(std::log(x + std::exp(std::numbers::e))));
    return l;
  }

  // n f_n for a lifetime pmf f: the same family one power lighter.
  PowerLogFamily size_biased() const {
    if (!(alpha > 1.0)) throw DomainError("size_biased: requires a finite mean (alpha > 1)");
    return {alpha - 1.0, beta, gamma};
  }

  bool pure_power() const { return beta == 0.0 && gamma == 0.0; }

  std::string label() const {
    return "P[phi=n] ~ n^-" + std::to_string(1.0 + alpha) + " (log n)^-" + std::to_string(beta) +
           " (log log n)^-" + std::to_string(gamma);
  }
};

namespace detail {

// I(x) = int_x^inf w, tabulated in log form on a log grid from x0, plus its
// running integral J(x) = int_{x0}^x I.
class PowerLogTail final : public TailModel {
 public:
  PowerLogTail(PowerLogFamily fam, double x0, double log_norm) : fam_(fam), log_norm_(log_norm) {
    if (!(fam.alpha > 0.0)) throw DomainError("PowerLogTail: alpha must be positive");
    s0_ = std::log(x0);
    const std::size_t n = static_cast<std::size_t>(std::ceil((s_max - s0_) / ds)) + 1;
    log_I_.assign(n, 0.0);
    auto log_h = [this](double s) { return fam_.log_weight(std::exp(s)) + s; };
    double s_end = s0_ + ds * static_cast<double>(n - 1);
    // Beyond the grid: I(x) ~ x^{-alpha} l(x) / alpha.
    log_I_[n - 1] = log_h(s_end) - std::log(fam_.alpha);
    for (std::size_t j = n - 1; j-- > 0;) {
      double a = s0_ + ds * static_cast<double>(j);
      double h0 = log_h(a), hm = log_h(a + 0.5 * ds), h1 = log_h(a + ds);
      double cell = h0 + std::log(ds / 6.0 * (1.0 + 4.0 * std::exp(hm - h0) + std::exp(h1 - h0)));
      log_I_[j] = log_sum_exp(log_I_[j + 1], cell);
    }
    J_.assign(n, 0.0);
    for (std::size_t j = 1; j < n; ++j) {
      double a = s0_ + ds * static_cast<double>(j - 1);
      // int I(e^s) e^s ds over one cell, trapezoid in log space is enough here.
      double f0 = std::exp(log_I_[j - 1] + a), f1 = std::exp(log_I_[j] + a + ds);
      J_[j] = J_[j - 1] + 0.5 * ds * (f0 + f1);
    }
  }

  double log_I(double x) const {
    double s = std::log(x);
    if (fam_.pure_power()) return -fam_.alpha * s - std::log(fam_.alpha);
    double pos = (s - s0_) / ds;
    if (pos <= 0.0) return log_I_.front();
    auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= log_I_.size()) {
      double end = s0_ + ds * static_cast<double>(log_I_.size() - 1);
      return log_I_.back() - fam_.alpha * (s - end);
    }
    double w = pos - static_cast<double>(i);
    return log_I_[i] * (1.0 - w) + log_I_[i + 1] * w;
  }

  double J(double x) const {
    double pos = (std::log(x) - s0_) / ds;
    if (pos <= 0.0) return 0.0;
    auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= J_.size()) return J_.back();
    double w = pos - static_cast<double>(i);
    return J_[i] * (1.0 - w) + J_[i + 1] * w;
  }

  // P[phi > k] = I(k + 1/2) / Z.
  double tail(double k) const override { return std::exp(log_I(k + 0.5) - log_norm_); }

  double partial_sum(double k0, double t) const override {
    if (t <= k0) return 0.0;
    if (fam_.pure_power() && fam_.alpha != 1.0) {
      // sum_{k0<=k<t} I(k+1/2) ~ int_{k0}^{t} I, closed form for pure powers
      double a = fam_.alpha;
      return (std::pow(t, 1.0 - a) - std::pow(k0, 1.0 - a)) / (a * (1.0 - a)) * std::exp(-log_norm_);
    }
    return (J(t) - J(k0)) * std::exp(-log_norm_);
  }

  double inverse(double u, double k_min) const override {
    double log_target = std::log(u) + log_norm_;
    double x;
    if (fam_.pure_power()) {
      x = std::exp(-(log_target + std::log(fam_.alpha)) / fam_.alpha);
    } else {
      // log I is decreasing; bisection on the grid index then linear in s.
      std::size_t lo = 0, hi = log_I_.size() - 1;
      if (log_target >= log_I_.front()) {
        x = std::exp(s0_);
      } else if (log_target <= log_I_.back()) {
        double end = s0_ + ds * static_cast<double>(hi);
        x = std::exp(end + (log_I_.back() - log_target) / fam_.alpha);
      } else {
        while (hi - lo > 1) {
          std::size_t mid = (lo + hi) / 2;
          if (log_I_[mid] > log_target) {
            lo = mid;
          } else {
            hi = mid;
          }
        }
        double w = (log_I_[lo] - log_target) / (log_I_[lo] - log_I_[hi]);
        x = std::exp(s0_ + ds * (static_cast<double>(lo) + w));
      }
    }
    // smallest integer k with k + 1/2 > x
    double k = std::floor(x - 0.5) + 1.0;
    return std::max(k, k_min);
  }

 private:
  static constexpr double ds = 0.02;
  static constexpr double s_max = 700.0;
  PowerLogFamily fam_;
  double log_norm_;
  double s0_ = 0.0;
  std::vector<double> log_I_, J_;
};

// No mass beyond the head.
class ZeroTail final : public TailModel {
 public:
  double tail(double) const override { return 0.0; }
  double partial_sum(double, double) const override { return 0.0; }
  double inverse(double, double k_min) const override { return k_min; }
};

// Tail rule (L(k+1) - L(k)) / L(1) derived from a concave L.
class RuleTail final : public TailModel {
 public:
  RuleTail(std::function<double(double)> L) : L_(std::move(L)), L1_(L_(1.0)) {}
  double tail(double k) const override { return (L_(k + 1.0) - L_(k)) / L1_; }
  double partial_sum(double k0, double t) const override { return (L_(t) - L_(k0)) / L1_; }

 private:
  std::function<double(double)> L_;
  double L1_;
};

}  // namespace detail

// An N-valued random variable given by its tail P[phi > k]: tabulated for
// k <= cutoff, analytic beyond.
class DiscreteHeavyTail {
 public:
  DiscreteHeavyTail(std::vector<double> head, std::shared_ptr<const TailModel> beyond, std::string label)
      : head_(std::move(head)), beyond_(std::move(beyond)), label_(std::move(label)) {
    if (head_.empty()) throw DomainError("DiscreteHeavyTail: empty head");
    if (head_[0] > 1.0 + 1e-12) throw DomainError("DiscreteHeavyTail: P[phi>0] must be <= 1");
    for (std::size_t k = 0; k < head_.size(); ++k) {
      if (!(head_[k] >= 0.0)) throw DomainError("DiscreteHeavyTail: negative tail");
      if (k > 0 && head_[k] > head_[k - 1] * (1.0 + 1e-12))
        throw ConcavityError("DiscreteHeavyTail: tail must be nonincreasing");
    }
    cum_.assign(head_.size() + 1, 0.0);
    for (std::size_t k = 0; k < head_.size(); ++k) cum_[k + 1] = cum_[k] + head_[k];
    build_guide();
  }

  // Tabulated head for k <= cutoff from the pmf weights, analytic tail
  // integral beyond; normalized to a probability distribution on {1, 2, ...}.
  static DiscreteHeavyTail power_log(const PowerLogFamily& fam, std::size_t cutoff = 1000000) {
    if (!(fam.alpha > 0.0)) throw DomainError("power_log: alpha must be positive");
    if (cutoff < 1) throw DomainError("power_log: cutoff must be >= 1");
    // suffix[k] = sum_{n=k+1}^{cutoff} w(n), computed from the small end up
    std::vector<double> w(cutoff + 1, 0.0);
    for (std::size_t n = 1; n <= cutoff; ++n) w[n] = std::exp(fam.log_weight(static_cast<double>(n)));
    auto unnormalized = std::make_shared<detail::PowerLogTail>(fam, static_cast<double>(cutoff) + 0.5, 0.0);
    double beyond = std::exp(unnormalized->log_I(static_cast<double>(cutoff) + 0.5));
    std::vector<double> head(cutoff + 1);
    double suffix = beyond;
    for (std::size_t k = cutoff + 1; k-- > 0;) {
      head[k] = suffix;
      suffix += w[k];
    }
    double Z = head[0];
    for (double& h : head) h /= Z;
    auto tail = std::make_shared<detail::PowerLogTail>(fam, static_cast<double>(cutoff) + 0.5, std::log(Z));
    return DiscreteHeavyTail(std::move(head), std::move(tail), fam.label());
  }

  // Finite support {1, ..., K} from pmf[k-1] = P[phi = k]; normalized.
  static DiscreteHeavyTail finite(const std::vector<double>& pmf, std::string label = "finite") {
    if (pmf.empty()) throw DomainError("finite: empty pmf");
    double total = 0.0;
    for (double p : pmf) {
      if (!(p >= 0.0)) throw DomainError("finite: negative probability");
      total += p;
    }
    if (!(total > 0.0)) throw DomainError("finite: zero total mass");
    std::vector<double> head(pmf.size() + 1, 0.0);
    double suffix = 0.0;
    for (std::size_t k = pmf.size(); k-- > 0;) {
      suffix += pmf[k] / total;
      head[k] = std::min(1.0, suffix);
    }
    head[0] = 1.0;
    return DiscreteHeavyTail(std::move(head), std::make_shared<detail::ZeroTail>(), std::move(label));
  }

  std::size_t cutoff() const { return head_.size() - 1; }
  const std::string& label() const { return label_; }

  // P[phi > k].
  double tail(double k) const {
    if (k < 0.0) return 1.0;
    k = std::floor(k);
    if (k <= static_cast<double>(cutoff())) return head_[static_cast<std::size_t>(k)];
    return beyond_->tail(k);
  }

  // P[phi = k].
  double pmf(double k) const { return tail(k - 1.0) - tail(k); }

  // E[phi ^ t] = int_0^t P[phi > s] ds.
  double truncated_expectation(double t) const {
    if (t <= 0.0) return 0.0;
    double fl = std::floor(t);
    double frac = t - fl;
    double whole;
    auto K1 = static_cast<double>(cumulative_size());
    if (fl <= K1) {
      whole = cum_[static_cast<std::size_t>(fl)];
    } else {
      whole = cum_.back() + beyond_->partial_sum(K1, fl);
    }
    return whole + frac * tail(fl);
  }

  // Inversion: smallest k with P[phi > k] < U, U ~ Unif(0,1).
  double sample(Stream& rng) const { return quantile_from_uniform(rng.uniform_open()); }

  double quantile_from_uniform(double u) const {
    auto idx = static_cast<std::size_t>(u * guide_size);
    if (idx >= guide_size) idx = guide_size - 1;
    std::size_t lo = guide_[idx];
    std::size_t hi = idx > 0 ? guide_[idx - 1] : head_.size();
    // first k in [lo, hi) with head_[k] < u, hi if none
    while (lo < hi) {
      std::size_t mid = lo + (hi - lo) / 2;
      if (head_[mid] < u) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    if (lo < head_.size()) return static_cast<double>(lo);
    return beyond_->inverse(u, static_cast<double>(head_.size()));
  }

 private:
  static constexpr std::size_t guide_size = 1 << 16;

  std::size_t cumulative_size() const { return head_.size(); }

  // guide_[j] = first k with P[phi > k] < (j+1)/guide_size.
  void build_guide() {
    guide_.assign(guide_size, head_.size());
    std::size_t k = 0;
    for (std::size_t j = guide_size; j-- > 0;) {
      double level = static_cast<double>(j + 1) / guide_size;
      while (k < head_.size() && head_[k] >= level) ++k;
      guide_[j] = k;
    }
  }

  std::vector<double> head_;
  std::vector<double> cum_;
  std::shared_ptr<const TailModel> beyond_;
  std::string label_;
  std::vector<std::size_t> guide_;
};

// P[phi > k] := (L(k+1) - L(k)) / L(1), so that E[phi ^ t] = L(t)/L(1) at
// integers. Increasing increments are a concavity violation.
inline DiscreteHeavyTail distribution_from_L(std::function<double(double)> L, std::size_t cutoff) {
  const double L1 = L(1.0);
  if (!(L1 > 0.0)) throw DomainError("distribution_from_L: L(1) must be positive");
  std::vector<double> head(cutoff + 1);
  double prev = L(0.0);
  if (prev < 0.0) throw DomainError("distribution_from_L: L(0) must be >= 0");
  for (std::size_t k = 0; k <= cutoff; ++k) {
    double next = L(static_cast<double>(k) + 1.0);
    head[k] = (next - prev) / L1;
    if (k > 0 && head[k] > head[k - 1] * (1.0 + 1e-9) + 1e-300)
      throw ConcavityError("distribution_from_L: increments of L must not increase");
    prev = next;
  }
  auto rule = std::make_shared<detail::RuleTail>(L);
  return DiscreteHeavyTail(std::move(head), std::move(rule), "from L");
}

}  // namespace occlab
