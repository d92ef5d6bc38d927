#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "occlab/errors.hpp"
#include "occlab/parallel.hpp"
#include "occlab/regvar.hpp"
#include "occlab/rng.hpp"

namespace occlab {

inline std::vector<std::uint64_t> geometric_checkpoints(std::uint64_t n_steps, std::uint64_t first = 100) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t n = first; n < n_steps; n *= 10) out.push_back(n);
  out.push_back(n_steps);
  return out;
}

// Renewal chain on {0, 1, ...}: from 0 jump to k-1 with probability f_k,
// otherwise step down by one.
struct RenewalChainSpec {
  DiscreteHeavyTail lifetime;
  // Law of the lifetime weighted by its size, m f_m / sum j f_j; unset
  // when the mean is infinite.
  std::optional<DiscreteHeavyTail> size_biased;
  bool finite_mean = true;
  bool infinite_second_moment = true;

  // f_k proportional to the power-log weights.
  static RenewalChainSpec power_log(const PowerLogFamily& fam, std::size_t cutoff = 1000000) {
    bool finite_mean = fam.alpha > 1.0;
    bool infinite_second = fam.alpha < 2.0 || (fam.alpha == 2.0 && fam.beta <= 1.0);
    std::optional<DiscreteHeavyTail> biased;
    if (finite_mean) biased = DiscreteHeavyTail::power_log(fam.size_biased(), cutoff);
    return {DiscreteHeavyTail::power_log(fam, cutoff), std::move(biased), finite_mean, infinite_second};
  }

  // f_k = pmf[k-1], finite support.
  static RenewalChainSpec finite(const std::vector<double>& pmf) {
    std::vector<double> weighted(pmf.size());
    for (std::size_t k = 0; k < pmf.size(); ++k) weighted[k] = static_cast<double>(k + 1) * pmf[k];
    return {DiscreteHeavyTail::finite(pmf), DiscreteHeavyTail::finite(weighted), true, false};
  }

  // E[lifetime] = sum_k P[phi > k]; the tail beyond 10^12 is dropped.
  double mean_lifetime() const { return lifetime.truncated_expectation(1e12); }
};

struct TowerRow {
  std::uint64_t n = 0;
  std::uint64_t k = 0;  // current tower index X_{N_n}
  std::uint64_t s_a = 0, s_b = 0;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  double run_max = std::numeric_limits<double>::quiet_NaN();
};

struct TowerResult {
  std::uint64_t trial = 0;
  std::vector<TowerRow> rows;
  // Steps n at which |S_n(A) - S_n(B)| > X_{N_n}.
  std::uint64_t bound_violations = 0;
  std::uint64_t max_gap = 0;
};

// Tower over the renewal chain, states (k, j), 0 <= j <= 2k+1, started at
// (0,0). A = {0 < j <= k}, B = {j > k+1}. The structural bound is checked at
// every step.
inline TowerResult tower_ratio_run(const RenewalChainSpec& spec, std::uint64_t n_steps, std::uint64_t seed,
                                   std::uint64_t trial = 0, std::vector<std::uint64_t> checkpoints = {}) {
  if (!spec.finite_mean) throw HypothesisError("tower_ratio_run: lifetime must have finite mean");
  if (checkpoints.empty()) checkpoints = geometric_checkpoints(n_steps);
  Stream rng(seed, trial);
  TowerResult res;
  res.trial = trial;
  std::uint64_t k = 0, j = 0, n = 0, sa = 0, sb = 0;
  double run_max = std::numeric_limits<double>::quiet_NaN();
  std::size_t next_cp = 0;
  while (n < n_steps) {
    // visit (k, j) at time n
    if (j >= 1 && j <= k) ++sa;
    if (j >= k + 2) ++sb;
    const std::uint64_t current_k = k;
    ++n;
    std::uint64_t gap = sa > sb ? sa - sb : sb - sa;
    res.max_gap = std::max(res.max_gap, gap);
    if (gap > current_k) ++res.bound_violations;
    if (sa >= 1 && sb >= 1) {
      double r = static_cast<double>(sa) / static_cast<double>(sb);
      run_max = std::isnan(run_max) ? r : std::max(run_max, r);
    }
    if (next_cp < checkpoints.size() && checkpoints[next_cp] == n) {
      TowerRow row{n, current_k, sa, sb};
      if (sa >= 1 && sb >= 1) row.ratio = static_cast<double>(sa) / static_cast<double>(sb);
      row.run_max = run_max;
      res.rows.push_back(row);
      ++next_cp;
    }
    // transition
    if (k == 0) {
      k = static_cast<std::uint64_t>(spec.lifetime.sample(rng)) - 1;
      j = 0;
    } else if (j < 2 * k + 1) {
      ++j;
    } else {
      --k;
      j = 0;
    }
  }
  return res;
}

struct TannyRow {
  std::uint64_t n = 0;
  std::uint64_t x = 0;
  double x_over_n = 0.0;
};

struct TannyResult {
  std::uint64_t trial = 0;
  std::uint64_t x0 = 0;
  std::vector<TannyRow> rows;
  // sup over 1 <= n <= n_steps of X_n / n, and where it is attained.
  double max_ratio = 0.0;
  std::uint64_t argmax = 0;
  // argmax is 1 or a time right after a visit to 0.
  bool argmax_at_renewal = true;
  // visits to states 0..occupation.size()-1 during times 0..n_steps-1
  std::vector<std::uint64_t> occupation;
};

// Base chain from the stationary law mu_k proportional to P[phi > k],
// sampled as a uniform point of a size-biased lifetime. Runs between
// renewals are handled in one piece.
inline TannyResult tanny_check(const RenewalChainSpec& spec, std::uint64_t n_steps, std::uint64_t seed,
                               std::uint64_t trial = 0, std::vector<std::uint64_t> checkpoints = {},
                               std::size_t occupation_states = 11) {
  if (!spec.finite_mean || !spec.size_biased) throw HypothesisError("tanny_check: lifetime must have finite mean");
  if (checkpoints.empty()) checkpoints = geometric_checkpoints(n_steps);
  Stream rng(seed, trial);
  TannyResult res;
  res.trial = trial;
  res.occupation.assign(occupation_states, 0);
  auto m = static_cast<std::uint64_t>(spec.size_biased->sample(rng));
  std::uint64_t x0 = std::min<std::uint64_t>(m - 1, static_cast<std::uint64_t>(rng.uniform() * static_cast<double>(m)));
  res.x0 = x0;

  // a run: X_s = h, X_{s+i} = h - i for 0 <= i <= h
  std::uint64_t s = 0, h = x0;
  std::size_t next_cp = 0;
  res.max_ratio = -1.0;
  bool first_run = true;
  while (s < n_steps) {
    const std::uint64_t end = s + h;  // time of the visit to 0
    // occupation of low states within [s, min(end, n_steps - 1)]
    for (std::size_t k = 0; k < occupation_states && k <= h; ++k) {
      std::uint64_t t = end - k;
      if (t < n_steps) ++res.occupation[k];
    }
    // running max of X_n/n: decreasing along the run
    std::uint64_t t0 = std::max<std::uint64_t>(s, 1);
    if (t0 <= end && t0 <= n_steps) {
      double r = static_cast<double>(h - (t0 - s)) / static_cast<double>(t0);
      if (r > res.max_ratio) {
        res.max_ratio = r;
        res.argmax = t0;
        res.argmax_at_renewal = t0 == 1 || !first_run;
      }
    }
    while (next_cp < checkpoints.size() && checkpoints[next_cp] <= end) {
      std::uint64_t n = checkpoints[next_cp];
      std::uint64_t x = h - (n - s);
      res.rows.push_back({n, x, n == 0 ? 0.0 : static_cast<double>(x) / static_cast<double>(n)});
      ++next_cp;
    }
    // renewal at time end: next state is lifetime - 1
    s = end + 1;
    h = static_cast<std::uint64_t>(spec.lifetime.sample(rng)) - 1;
    first_run = false;
  }
  return res;
}

enum class IntegralVerdict { divergent, convergent };

inline const char* to_string(IntegralVerdict v) {
  return v == IntegralVerdict::divergent ? "divergent" : "convergent";
}

// (phi_n, psi_n) iid pairs. Both coordinates are driven by one uniform per
// step (comonotone coupling), so phi = psi when the laws agree.
struct IidProcessSpec {
  DiscreteHeavyTail phi;
  DiscreteHeavyTail psi;
  // Catalogue descriptors; required by the classifier.
  std::optional<PowerLogFamily> phi_family, psi_family;
  IntegralVerdict classification = IntegralVerdict::divergent;

  static IidProcessSpec power_log(const PowerLogFamily& phi_fam, const PowerLogFamily& psi_fam,
                                  IntegralVerdict declared, std::size_t cutoff = 1000000) {
    return {DiscreteHeavyTail::power_log(phi_fam, cutoff), DiscreteHeavyTail::power_log(psi_fam, cutoff),
            phi_fam, psi_fam, declared};
  }
};

namespace detail {

// sum n^{-s} (log n)^{-b} (log log n)^{-g} converges iff s > 1, or s = 1 and
// b > 1, or s = b = 1 and g > 1.
inline bool bertrand_converges(double s, double b, double g) {
  if (s != 1.0) return s > 1.0;
  if (b != 1.0) return b > 1.0;
  return g > 1.0;
}

}  // namespace detail

// Decides whether int a_psi(phi) dP diverges, a_psi(t) = t / L_psi(t), for
// power-log pmfs P[X = n] ~ n^{-(1+alpha)} (log n)^{-beta} (log log n)^{-gamma},
// by reducing sum P[phi = n] a_psi(n) to a Bertrand series.
inline IntegralVerdict classify_integral_criterion(const IidProcessSpec& spec) {
  if (!spec.phi_family || !spec.psi_family)
    throw UnsupportedFamilyError("classify_integral_criterion: tails outside the power-log catalogue");
  const auto& f = *spec.phi_family;
  const auto& p = *spec.psi_family;
  if (detail::bertrand_converges(f.alpha, f.beta, f.gamma))
    throw HypothesisError("classify_integral_criterion: phi is integrable");
  double s, b, g;
  if (p.alpha < 1.0) {
    // L_psi(t) ~ t^{1-alpha} l(t)
    s = f.alpha + 1.0 - p.alpha;
    b = f.beta - p.beta;
    g = f.gamma - p.gamma;
  } else if (p.alpha == 1.0 && p.beta < 1.0) {
    // L_psi(t) ~ (log t)^{1-beta} (log log t)^{-gamma}
    s = f.alpha;
    b = f.beta + 1.0 - p.beta;
    g = f.gamma - p.gamma;
  } else if (p.alpha == 1.0 && p.beta == 1.0 && p.gamma < 1.0) {
    // L_psi(t) ~ (log log t)^{1-gamma}
    s = f.alpha;
    b = f.beta;
    g = f.gamma + 1.0 - p.gamma;
  } else if (p.alpha == 1.0 && p.beta == 1.0 && p.gamma == 1.0) {
    throw UnsupportedFamilyError("classify_integral_criterion: L_psi ~ log log log t is not catalogued");
  } else {
    // psi integrable, a_psi(t) ~ t / E[psi]
    s = f.alpha;
    b = f.beta;
    g = f.gamma;
  }
  return detail::bertrand_converges(s, b, g) ? IntegralVerdict::convergent : IntegralVerdict::divergent;
}

struct SumsMaximaRow {
  std::uint64_t n = 0;
  double ratio = 0.0;    // phi_n / sum_{k<n} psi_k
  double run_max = 0.0;  // max over 1 <= m <= n
};

struct SumsMaximaResult {
  std::uint64_t trial = 0;
  std::vector<SumsMaximaRow> rows;
  // first n with ratio above `threshold`, 0 if never
  std::uint64_t first_exceedance = 0;

  // running max unchanged over the last decade of checkpoints
  bool max_settled() const {
    if (rows.size() < 2) return false;
    return rows.back().run_max == rows[rows.size() - 2].run_max;
  }
};

inline SumsMaximaResult sums_vs_maxima_run(const IidProcessSpec& spec, std::uint64_t n_steps, std::uint64_t seed,
                                           std::uint64_t trial = 0, std::vector<std::uint64_t> checkpoints = {},
                                           double threshold = 100.0) {
  if (checkpoints.empty()) checkpoints = geometric_checkpoints(n_steps, 10);
  Stream rng(seed, trial);
  SumsMaximaResult res;
  res.trial = trial;
  double sum = 0.0, run_max = 0.0;
  std::size_t next_cp = 0;
  for (std::uint64_t n = 0; n <= n_steps; ++n) {
    double u = rng.uniform_open();
    double phi = spec.phi.quantile_from_uniform(u);
    double psi = spec.psi.quantile_from_uniform(u);
    if (n >= 1) {
      double r = phi / sum;
      run_max = std::max(run_max, r);
      if (res.first_exceedance == 0 && r > threshold) res.first_exceedance = n;
      while (next_cp < checkpoints.size() && checkpoints[next_cp] == n) {
        res.rows.push_back({n, r, run_max});
        ++next_cp;
      }
    }
    sum += psi;
  }
  return res;
}

// Trial-parallel drivers: results in trial order, independent of threads.
inline std::vector<TowerResult> tower_ratio_runs(const RenewalChainSpec& spec, std::uint64_t n_steps,
                                                 std::uint64_t seed, std::size_t trials) {
  return parallel_map(trials, [&](std::size_t i) { return tower_ratio_run(spec, n_steps, seed, i); });
}

inline std::vector<TannyResult> tanny_checks(const RenewalChainSpec& spec, std::uint64_t n_steps,
                                             std::uint64_t seed, std::size_t trials) {
  return parallel_map(trials, [&](std::size_t i) { return tanny_check(spec, n_steps, seed, i); });
}

inline std::vector<SumsMaximaResult> sums_vs_maxima_runs(const IidProcessSpec& spec, std::uint64_t n_steps,
                                                         std::uint64_t seed, std::size_t trials) {
  return parallel_map(trials, [&](std::size_t i) { return sums_vs_maxima_run(spec, n_steps, seed, i); });
}

inline void write_tower_csv(std::ostream& os, const std::vector<TowerResult>& runs) {
  os << "trial,n,X_n,S_A,S_B,ratio,runmax\n";
  os.precision(17);
  for (const auto& r : runs)
    for (const auto& row : r.rows)
      os << r.trial << ',' << row.n << ',' << row.k << ',' << row.s_a << ',' << row.s_b << ',' << row.ratio << ','
         << row.run_max << '\n';
}

inline void write_tanny_csv(std::ostream& os, const std::vector<TannyResult>& runs) {
  os << "trial,n,X_n,ratio\n";
  os.precision(17);
  for (const auto& r : runs)
    for (const auto& row : r.rows) os << r.trial << ',' << row.n << ',' << row.x << ',' << row.x_over_n << '\n';
}

inline void write_sums_maxima_csv(std::ostream& os, const std::vector<SumsMaximaResult>& runs) {
  os << "trial,n,ratio,runmax\n";
  os.precision(17);
  for (const auto& r : runs)
    for (const auto& row : r.rows) os << r.trial << ',' << row.n << ',' << row.ratio << ',' << row.run_max << '\n';
}

}  // namespace occlab
