#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "occlab/distributions.hpp"
#include "occlab/errors.hpp"
#include "occlab/maps.hpp"
#include "occlab/parallel.hpp"
#include "occlab/regvar.hpp"
#include "occlab/rng.hpp"

namespace occlab {

// An interval of [0,1] with explicit endpoint conventions.
struct Interval {
  double lo = 0.0, hi = 1.0;
  bool lo_closed = true, hi_closed = true;

  bool contains(double x) const {
    return (lo_closed ? x >= lo : x > lo) && (hi_closed ? x <= hi : x < hi);
  }
  double length() const { return std::max(0.0, hi - lo); }
};

// A finite union of intervals.
struct IntervalSet {
  std::vector<Interval> parts;

  IntervalSet() = default;
  IntervalSet(std::initializer_list<Interval> p) : parts(p) {}

  bool contains(double x) const {
    return std::any_of(parts.begin(), parts.end(), [x](const Interval& i) { return i.contains(x); });
  }
  double length() const {
    double s = 0.0;
    for (const auto& p : parts) s += p.length();
    return s;
  }
  // Uniform point of the set (length-weighted choice of a part).
  double sample(Stream& rng) const {
    double total = length();
    if (!(total > 0.0)) throw DomainError("IntervalSet: cannot sample a null set");
    double u = rng.uniform() * total;
    for (const auto& p : parts) {
      if (u < p.length()) return p.lo + u;
      u -= p.length();
    }
    return parts.back().hi;
  }

  static IntervalSet closed(double lo, double hi) { return {Interval{lo, hi, true, true}}; }
  static IntervalSet open(double lo, double hi) { return {Interval{lo, hi, false, false}}; }
  static IntervalSet left_open(double lo, double hi) { return {Interval{lo, hi, false, true}}; }
  static IntervalSet right_open(double lo, double hi) { return {Interval{lo, hi, true, false}}; }
};

struct OrbitConfig {
  MapParams map{0.5, 1.0, 1.0};
  std::uint64_t n_steps = 0;
  std::uint64_t n_trials = 1;
  std::uint64_t seed = 0;
  // Empty means the geometric grid 10^2, 10^3, ..., n_steps.
  std::vector<std::uint64_t> checkpoints;
  // A = [0, delta_a), B = (1 - delta_b, 1]. Unset means A = [0,c), B = (c,1].
  std::optional<double> delta_a, delta_b;
  // Middle set; unset means [delta_a, 1 - delta_b], which partitions with A, B.
  std::optional<double> middle_epsilon;
  // Unset means M = (c, 1].
  std::optional<IntervalSet> M;
  // Unset means Y = (f0(c), f1(c)].
  std::optional<IntervalSet> Y;
  // Initial law: exact point, uniform on M, a custom sampler, or uniform on
  // [init_lo, init_hi].
  std::optional<double> x0;
  bool start_in_m = false;
  std::function<double(Stream&)> initial;
  double init_lo = 0.0, init_hi = 1.0;
  // Ratio extremes use n >= extremes_from (and both counts >= 1).
  std::uint64_t extremes_from = 1;
  // Threshold on a d^p below which orbits near a fixed point are advanced
  // in blocks; 0 iterates every step exactly.
  double jump_level = 0x1p-8;

  double resolved_delta_a() const { return delta_a.value_or(map.c()); }
  double resolved_delta_b() const { return delta_b.value_or(1.0 - map.c()); }
  IntervalSet resolved_M() const { return M.value_or(IntervalSet::left_open(map.c(), 1.0)); }
  IntervalSet resolved_Y() const {
    if (Y) return *Y;
    return IntervalSet::left_open(inverse_branch(map, Branch::left, map.c()),
                                  inverse_branch(map, Branch::right, map.c()));
  }
  IntervalSet resolved_A() const { return IntervalSet::right_open(0.0, resolved_delta_a()); }
  IntervalSet resolved_B() const { return IntervalSet::left_open(1.0 - resolved_delta_b(), 1.0); }
  IntervalSet resolved_middle() const {
    if (middle_epsilon) return IntervalSet::closed(*middle_epsilon, 1.0 - *middle_epsilon);
    return IntervalSet::closed(resolved_delta_a(), 1.0 - resolved_delta_b());
  }
  std::vector<std::uint64_t> resolved_checkpoints() const {
    if (!checkpoints.empty()) return checkpoints;
    std::vector<std::uint64_t> out;
    for (std::uint64_t n = 100; n < n_steps; n *= 10) out.push_back(n);
    out.push_back(n_steps);
    return out;
  }
  std::uint64_t resolved_extremes_from() const { return std::max<std::uint64_t>(1, extremes_from); }

  void validate() const {
    double da = resolved_delta_a(), db = resolved_delta_b();
    if (!(da > 0.0 && da < 1.0) || !(db > 0.0 && db < 1.0))
      throw ValidationError("OrbitConfig: delta_A and delta_B must lie in (0,1)");
    if (da + db > 1.0) throw ValidationError("OrbitConfig: A and B must be disjoint");
    if (middle_epsilon && !(*middle_epsilon > 0.0 && *middle_epsilon < 0.5))
      throw ValidationError("OrbitConfig: middle epsilon must lie in (0,1/2)");
    if (n_trials < 1) throw ValidationError("OrbitConfig: n_trials must be >= 1");
    if (!(jump_level >= 0.0 && jump_level < 1.0)) throw ValidationError("OrbitConfig: jump_level must lie in [0,1)");
    if (!(init_lo >= 0.0 && init_hi <= 1.0 && init_lo <= init_hi))
      throw ValidationError("OrbitConfig: initial interval must lie in [0,1]");
    if (x0 && !(*x0 >= 0.0 && *x0 <= 1.0)) throw ValidationError("OrbitConfig: x0 must lie in [0,1]");
    auto cp = resolved_checkpoints();
    for (std::size_t i = 0; i < cp.size(); ++i) {
      if (cp[i] > n_steps) throw ValidationError("OrbitConfig: checkpoints must not exceed n_steps");
      if (i > 0 && cp[i] <= cp[i - 1]) throw ValidationError("OrbitConfig: checkpoints must increase");
    }
  }
};

struct CheckpointRow {
  std::uint64_t n = 0;
  std::uint64_t s_a = 0, s_b = 0, s_m = 0, s_mid = 0;
  // NaN while undefined.
  double ratio = std::numeric_limits<double>::quiet_NaN();
  double run_max = std::numeric_limits<double>::quiet_NaN();
  double run_min = std::numeric_limits<double>::quiet_NaN();

  bool ratio_defined() const { return !std::isnan(ratio); }
  double mid_fraction() const { return n == 0 ? 0.0 : static_cast<double>(s_mid) / static_cast<double>(n); }
};

struct OccupationTrace {
  std::uint64_t trial = 0;
  double x0 = 0.0;
  std::vector<CheckpointRow> rows;
  // Steps starting at a point where T(x) - x rounds to 0.
  std::uint64_t stagnation_events = 0;
  // Steps advanced by the near-fixed-point shortcut.
  std::uint64_t jumped_steps = 0;
};

enum class YSide { a, b };

// Visit to Y at `time`; Y_A is the part of Y right of c (its excursions run
// through A), Y_B the part left of c.
struct ReturnEvent {
  std::uint64_t time = 0;
  std::uint64_t phi = 0;
  YSide side = YSide::a;
  // phi is a lower bound: the next visit lies beyond the orbit's end.
  bool censored = false;
};

// Maximal runs of consecutive visit times.
struct VisitRun {
  std::uint64_t first = 0, count = 0;
};

struct ReturnRecord {
  std::vector<ReturnEvent> y_returns;
  std::vector<VisitRun> m_visits;
  bool started_in_m = false;
  std::uint64_t n_steps = 0;

  std::uint64_t y_visits_by(std::uint64_t n) const {
    return static_cast<std::uint64_t>(
        std::lower_bound(y_returns.begin(), y_returns.end(), n,
                         [](const ReturnEvent& e, std::uint64_t t) { return e.time < t; }) -
        y_returns.begin());
  }
};

struct TrialOptions {
  bool record_y = false;
  bool record_m = false;
};

struct TrialResult {
  OccupationTrace trace;
  ReturnRecord record;
};

namespace detail {

// [lo, hi] in distance-from-fixed-point coordinates.
struct DRange {
  double lo, hi;
  bool lo_closed, hi_closed;
  bool contains(double d) const {
    return (lo_closed ? d >= lo : d > lo) && (hi_closed ? d <= hi : d < hi);
  }
};

// A set split into the two branch sides. Left: d = x on [0,c]. Right:
// d = 1 - x on [0, 1-c).
struct CompiledSet {
  std::array<std::vector<DRange>, 2> side;

  CompiledSet() = default;
  CompiledSet(const IntervalSet& s, double c) {
    for (const auto& p : s.parts) {
      if (p.lo <= c) {
        DRange r{p.lo, std::min(p.hi, c), p.lo_closed, p.hi > c ? true : p.hi_closed};
        if (r.lo < r.hi || (r.lo == r.hi && r.lo_closed && r.hi_closed)) side[0].push_back(r);
      }
      if (p.hi > c) {
        double lo = std::max(p.lo, c);
        DRange r{1.0 - p.hi, 1.0 - lo, p.hi_closed, p.lo >= c ? p.lo_closed : false};
        side[1].push_back(r);
      }
    }
  }

  bool contains(int s, double d) const {
    for (const auto& r : side[s])
      if (r.contains(d)) return true;
    return false;
  }

  void collect_boundaries(std::array<std::vector<double>, 2>& out) const {
    for (int s = 0; s < 2; ++s)
      for (const auto& r : side[s]) {
        out[s].push_back(r.lo);
        out[s].push_back(r.hi);
      }
  }
};

struct SideLaw {
  double a, p, q, span, scale;
  CuspPower pw;
  // a d^p < jump_level below this d.
  double d_jump;
};

}  // namespace detail

// Orbit of the built-in family held as (side, distance to that side's fixed
// point), which keeps full relative precision next to 0 and 1.
class OrbitStepper {
 public:
  // Below a d^p = jump_level the orbit is advanced in blocks using
  // z_j = z_0 - p a j + ((p+1) a / 2) log(z_0 / z_j), z = d^{-p}, the
  // expansion of d^{-p} under d -> d + a d^{1+p} to second order.
  OrbitStepper(const MapParams& m, double x, double jump_level = 0x1p-8) : jump_level_(jump_level) {
    for (int s = 0; s < 2; ++s) {
      Branch b = s == 0 ? Branch::left : Branch::right;
      double p = s == 0 ? m.p0() : m.p1();
      detail::SideLaw law{m.coefficient(b), p, 1.0 + p, m.span(b), 0.0, m.power(b), 0.0};
      law.scale = law.a * std::pow(law.span, law.q);
      law.d_jump = jump_level > 0.0 ? std::pow(jump_level / law.a, 1.0 / p) : 0.0;
      law_[s] = law;
    }
    set_point(m, x);
  }

  void set_point(const MapParams& m, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("OrbitStepper: x outside [0,1]");
    if (x <= m.c()) {
      side_ = 0;
      d_ = x;
    } else {
      side_ = 1;
      d_ = 1.0 - x;
    }
  }

  int side() const { return side_; }
  double distance() const { return d_; }
  double x() const { return side_ == 0 ? d_ : 1.0 - d_; }

  // One exact application of T.
  void step() {
    const auto& L = law_[side_];
    double w = d_ + L.a * L.pw(d_);
    bool stays = side_ == 0 ? w <= L.span : w < L.span;
    if (stays) {
      d_ = w;
      return;
    }
    // 1 - T(x) on the left (T(x) on the right) equals
    // (b - d) + a b^q (1 - (d/b)^q), written to keep precision near d = b.
    double gap = L.span - d_;
    double nd = gap + L.scale * -std::expm1(L.q * std::log1p(-gap / L.span));
    side_ = 1 - side_;
    const auto& M = law_[side_];
    nd = std::max(nd, 0.0);
    if (side_ == 0) {
      nd = std::min(nd, M.span);
    } else if (nd >= M.span) {
      nd = std::nextafter(M.span, 0.0);
    }
    d_ = nd;
  }

  // Advances between 1 and `limit` steps (limit >= 1) such that all visited
  // points before the last lie strictly below the next boundary value of
  // this side. Returns the number of steps; every skipped point shares the
  // starting point's side and set memberships.
  std::uint64_t advance(std::uint64_t limit, const std::vector<double>& boundaries, std::uint64_t& stagnations,
                        std::uint64_t& jumped) {
    const auto& L = law_[side_];
    if (d_ == 0.0) {
      // exact fixed point
      jumped += limit > 1 ? limit : 0;
      return limit;
    }
    if (d_ >= L.d_jump || limit < 2) {
      step();
      return 1;
    }
    if (d_ + L.a * L.pw(d_) == d_) ++stagnations;
    const double z0 = z_of(L, d_);
    const double corr = 0.5 * (L.p + 1.0) * L.a;
    auto steps_to = [&](double z) { return (z0 - z + corr * std::log(z0 / z)) / (L.p * L.a); };
    double j = steps_to(L.a / jump_level_);
    auto it = std::upper_bound(boundaries.begin(), boundaries.end(), d_);
    if (it != boundaries.end()) j = std::min(j, steps_to(z_of(L, *it)));
    j = std::min(std::floor(j), static_cast<double>(limit));
    if (!(j >= 2.0)) {
      step();
      return 1;
    }
    auto n = static_cast<std::uint64_t>(j);
    double z = z0 - L.p * L.a * j;
    for (int it2 = 0; it2 < 3; ++it2) z = z0 - L.p * L.a * j + corr * std::log(z0 / z);
    d_ = d_of(L, z);
    jumped += n;
    return n;
  }

 private:
  static double z_of(const detail::SideLaw& L, double d) {
    if (L.p == 1.0) return 1.0 / d;
    if (L.p == 2.0) return 1.0 / (d * d);
    return std::exp(-L.p * std::log(d));
  }
  static double d_of(const detail::SideLaw& L, double z) {
    if (L.p == 1.0) return 1.0 / z;
    if (L.p == 2.0) return 1.0 / std::sqrt(z);
    return std::exp(-std::log(z) / L.p);
  }

  std::array<detail::SideLaw, 2> law_{};
  double jump_level_;
  int side_ = 0;
  double d_ = 0.0;
};

inline double initial_point(const OrbitConfig& cfg, Stream& rng) {
  if (cfg.x0) return *cfg.x0;
  if (cfg.start_in_m) return cfg.resolved_M().sample(rng);
  if (cfg.initial) {
    double x = cfg.initial(rng);
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("initial sampler returned a point outside [0,1]");
    return x;
  }
  return rng.uniform(cfg.init_lo, cfg.init_hi);
}

// One orbit. Every quantity is a function of (seed, trial, config).
inline TrialResult simulate_trial(const OrbitConfig& cfg, std::uint64_t trial, const TrialOptions& opt = {}) {
  cfg.validate();
  const double c = cfg.map.c();
  const detail::CompiledSet A(cfg.resolved_A(), c), B(cfg.resolved_B(), c), Mset(cfg.resolved_M(), c),
      Mid(cfg.resolved_middle(), c);
  detail::CompiledSet Yset;
  if (opt.record_y) Yset = detail::CompiledSet(cfg.resolved_Y(), c);

  std::array<std::vector<double>, 2> bounds;
  for (const detail::CompiledSet* s : {&A, &B, &Mset, &Mid, static_cast<const detail::CompiledSet*>(&Yset)})
    s->collect_boundaries(bounds);
  for (auto& b : bounds) {
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
  }

  Stream rng(cfg.seed, trial);
  TrialResult res;
  res.trace.trial = trial;
  res.trace.x0 = initial_point(cfg, rng);
  res.record.n_steps = cfg.n_steps;
  res.record.started_in_m = cfg.resolved_M().contains(res.trace.x0);

  OrbitStepper orbit(cfg.map, res.trace.x0, cfg.jump_level);
  const auto checkpoints = cfg.resolved_checkpoints();
  const std::uint64_t from = cfg.resolved_extremes_from();

  std::uint64_t n = 0, sa = 0, sb = 0, sm = 0, smid = 0;
  double run_max = std::numeric_limits<double>::quiet_NaN(), run_min = run_max;
  bool extremes_started = false;
  std::size_t next_cp = 0;

  auto emit_rows = [&] {
    while (next_cp < checkpoints.size() && checkpoints[next_cp] == n) {
      CheckpointRow row{n, sa, sb, sm, smid};
      if (sa >= 1 && sb >= 1) row.ratio = static_cast<double>(sa) / static_cast<double>(sb);
      if (extremes_started) {
        row.run_max = run_max;
        row.run_min = run_min;
      }
      res.trace.rows.push_back(row);
      ++next_cp;
    }
  };
  emit_rows();

  while (n < cfg.n_steps) {
    const int s = orbit.side();
    const double d = orbit.distance();
    const bool in_a = A.contains(s, d), in_b = B.contains(s, d);
    const bool in_m = Mset.contains(s, d), in_mid = Mid.contains(s, d);
    const bool in_y = opt.record_y && Yset.contains(s, d);

    std::uint64_t limit = cfg.n_steps - n;
    if (next_cp < checkpoints.size()) limit = std::min(limit, checkpoints[next_cp] - n);
    if (n < from) limit = std::min(limit, from - n);
    // ratio definedness changes on the first A or B visit
    if ((in_a && sa == 0) || (in_b && sb == 0) || in_y) limit = 1;

    std::uint64_t k = orbit.advance(limit, bounds[s], res.trace.stagnation_events, res.trace.jumped_steps);

    if (in_y) {
      auto& ys = res.record.y_returns;
      if (!ys.empty()) ys.back().phi = n - ys.back().time;
      ys.push_back({n, 0, s == 1 ? YSide::a : YSide::b, false});
    }
    if (opt.record_m && in_m) {
      auto& mv = res.record.m_visits;
      if (!mv.empty() && mv.back().first + mv.back().count == n) {
        mv.back().count += k;
      } else {
        mv.push_back({n, k});
      }
    }
    n += k;
    if (in_a) sa += k;
    if (in_b) sb += k;
    if (in_m) sm += k;
    if (in_mid) smid += k;

    // Within a block R_n is monotone, so block ends carry the extremes.
    if (n >= from && sa >= 1 && sb >= 1) {
      double r = static_cast<double>(sa) / static_cast<double>(sb);
      if (!extremes_started) {
        run_max = run_min = r;
        extremes_started = true;
      } else {
        run_max = std::max(run_max, r);
        run_min = std::min(run_min, r);
      }
    }
    emit_rows();
  }
  if (!res.record.y_returns.empty()) {
    auto& last = res.record.y_returns.back();
    last.phi = cfg.n_steps - last.time;
    last.censored = true;
  }
  return res;
}

// fn(TrialResult) for every trial, results in trial order.
template <class Fn>
auto map_trials(const OrbitConfig& cfg, const TrialOptions& opt, Fn&& fn) {
  cfg.validate();
  return parallel_map(cfg.n_trials, [&](std::size_t i) { return fn(simulate_trial(cfg, i, opt)); });
}

inline std::vector<TrialResult> run_orbits(const OrbitConfig& cfg, const TrialOptions& opt = {}) {
  return map_trials(cfg, opt, [](TrialResult r) { return r; });
}

// Counts (k, n) pairs, k over the checkpoints and n over 0..#visits, where
// S_k(M) > n and phi_{M,n} < k disagree. phi_{M,n} is the time of the n-th
// return, reconstructed from the visit runs (phi_{M,0} = 0).
inline std::uint64_t verify_duality(const OccupationTrace& trace, const ReturnRecord& record) {
  if (!record.started_in_m) throw DomainError("verify_duality: the orbit must start in M");
  std::vector<std::uint64_t> times;
  for (const auto& r : record.m_visits)
    for (std::uint64_t i = 0; i < r.count; ++i) times.push_back(r.first + i);
  if (times.empty() || times.front() != 0) throw DomainError("verify_duality: missing visit at time 0");
  std::uint64_t violations = 0;
  const auto inf = std::numeric_limits<std::uint64_t>::max();
  for (const auto& row : trace.rows) {
    for (std::uint64_t n = 0; n <= times.size(); ++n) {
      std::uint64_t phi_n = n < times.size() ? times[n] : inf;
      bool lhs = row.s_m > n;
      bool rhs = phi_n < row.n;
      if (lhs != rhs) ++violations;
    }
  }
  return violations;
}

// Accumulates sum of min(phi, t) over Y-visits of one side whose window
// [time, time + t] fits inside the orbit, for each grid t.
class TruncatedExpectationEstimator {
 public:
  TruncatedExpectationEstimator(YSide side, std::vector<double> grid)
      : side_(side), grid_(std::move(grid)), sum_(grid_.size(), 0.0), count_(grid_.size(), 0) {
    for (std::size_t i = 0; i < grid_.size(); ++i)
      if (!(grid_[i] > 0.0) || (i > 0 && !(grid_[i] > grid_[i - 1])))
        throw DomainError("empirical_truncated_expectation: grid must be positive and increasing");
  }

  void add(const ReturnRecord& rec) {
    for (const auto& e : rec.y_returns) {
      if (e.side != side_) continue;
      ++returns_;
      auto room = static_cast<double>(rec.n_steps - e.time);
      for (std::size_t i = 0; i < grid_.size(); ++i) {
        if (grid_[i] > room) break;
        sum_[i] += std::min(static_cast<double>(e.phi), grid_[i]);
        ++count_[i];
      }
    }
  }

  void merge(const TruncatedExpectationEstimator& o) {
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      sum_[i] += o.sum_[i];
      count_[i] += o.count_[i];
    }
    returns_ += o.returns_;
  }

  std::uint64_t returns() const { return returns_; }

  // Monotone regularization and least concave majorant through the origin,
  // then the TruncatedExpectation invariants are enforced on construction.
  TruncatedExpectation finish(double mass = 1.0, std::uint64_t min_returns = 1000) const {
    if (returns_ < min_returns)
      throw InsufficientDataError("empirical_truncated_expectation: fewer than " + std::to_string(min_returns) +
                                  " returns on the side");
    std::vector<double> t, L;
    double prev = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      if (count_[i] == 0) break;
      prev = std::max(prev, sum_[i] / static_cast<double>(count_[i]));
      t.push_back(grid_[i]);
      L.push_back(prev);
    }
    if (t.size() < 2) throw InsufficientDataError("empirical_truncated_expectation: grid not covered");
    // hull over (0,0) and the points
    std::vector<double> hx{0.0}, hy{0.0};
    for (std::size_t i = 0; i < t.size(); ++i) {
      while (hx.size() >= 2) {
        std::size_t m = hx.size();
        double cross = (hx[m - 1] - hx[m - 2]) * (L[i] - hy[m - 2]) - (hy[m - 1] - hy[m - 2]) * (t[i] - hx[m - 2]);
        if (cross >= 0.0) {
          hx.pop_back();
          hy.pop_back();
        } else {
          break;
        }
      }
      hx.push_back(t[i]);
      hy.push_back(L[i]);
    }
    std::vector<double> out(t.size());
    std::size_t h = 1;
    for (std::size_t i = 0; i < t.size(); ++i) {
      while (hx[h] < t[i]) ++h;
      double w = (t[i] - hx[h - 1]) / (hx[h] - hx[h - 1]);
      out[i] = (hy[h - 1] + w * (hy[h] - hy[h - 1])) * mass;
    }
    return TruncatedExpectation::from_values(t, out);
  }

 private:
  YSide side_;
  std::vector<double> grid_;
  std::vector<double> sum_;
  std::vector<std::uint64_t> count_;
  std::uint64_t returns_ = 0;
};

// L(t) estimated from Y-return records of one side. `mass` scales both
// sides alike; the Y-sides carry equal measure since the induced map swaps
// them, so the default 1 leaves every normalizing sequence unchanged.
inline TruncatedExpectation empirical_truncated_expectation(const std::vector<ReturnRecord>& records, YSide side,
                                                            const std::vector<double>& grid, double mass = 1.0) {
  TruncatedExpectationEstimator est(side, grid);
  for (const auto& r : records) est.add(r);
  return est.finish(mass);
}

struct DkResult {
  EmpiricalDistribution sample;
  double ks = 0.0;
  double alpha = 1.0;
  double c_n = 0.0;
  std::uint64_t n = 0;
};

// S_n(M)/c(n) at the final checkpoint and its KS distance to ML(alpha).
inline DkResult dk_experiment(OrbitConfig cfg, const NormalizingSequence& normalizer,
                              std::optional<IntervalSet> M = std::nullopt) {
  if (cfg.map.p1() != 1.0) throw HypothesisError("dk_experiment: requires p1 = 1");
  if (M) cfg.M = M;
  cfg.checkpoints = {cfg.n_steps};
  const double cn = normalizer.at(static_cast<double>(cfg.n_steps));
  auto values = map_trials(cfg, {}, [&](const TrialResult& r) {
    return static_cast<double>(r.trace.rows.back().s_m) / cn;
  });
  EmpiricalDistribution emp(std::move(values));
  MLSpec ml(normalizer.alpha);
  double ks = ks_statistic(emp, [&](double y) { return ml_cdf(ml, y); });
  return DkResult{std::move(emp), ks, normalizer.alpha, cn, cfg.n_steps};
}

struct RatioSummary {
  std::vector<OccupationTrace> traces;
  std::vector<std::uint64_t> checkpoints;
  // Median of R_n over trials where it is defined, per checkpoint (NaN if none).
  std::vector<double> median_ratio;

  // Trials whose final running max >= hi and running min <= lo.
  double fraction_both(double hi, double lo) const {
    std::size_t k = 0;
    for (const auto& t : traces) {
      const auto& r = t.rows.back();
      if (r.run_max >= hi && r.run_min <= lo) ++k;
    }
    return static_cast<double>(k) / static_cast<double>(traces.size());
  }
};

inline RatioSummary ratio_experiment(const OrbitConfig& cfg) {
  RatioSummary out;
  out.traces = map_trials(cfg, {}, [](TrialResult r) { return std::move(r.trace); });
  out.checkpoints = cfg.resolved_checkpoints();
  for (std::size_t i = 0; i < out.checkpoints.size(); ++i) {
    std::vector<double> v;
    for (const auto& t : out.traces)
      if (t.rows[i].ratio_defined()) v.push_back(t.rows[i].ratio);
    out.median_ratio.push_back(v.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : EmpiricalDistribution(std::move(v)).median());
  }
  return out;
}

// Average over trials of the fraction of time spent in [eps, 1-eps], per
// checkpoint.
inline std::vector<double> mass_escape(OrbitConfig cfg, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw DomainError("mass_escape: epsilon must lie in (0,1/2)");
  cfg.middle_epsilon = epsilon;
  auto rows = map_trials(cfg, {}, [](TrialResult r) { return std::move(r.trace.rows); });
  auto cps = cfg.resolved_checkpoints();
  std::vector<double> out(cps.size(), 0.0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < cps.size(); ++i) out[i] += r[i].mid_fraction();
  for (double& v : out) v /= static_cast<double>(rows.size());
  return out;
}

inline void write_traces_csv(std::ostream& os, const std::vector<OccupationTrace>& traces) {
  os << "trial,n,S_A,S_B,S_M,R,R_runmax,R_runmin,mid_fraction\n";
  os.precision(17);
  auto num = [&os](double v) {
    if (std::isnan(v)) {
      os << "undefined";
    } else {
      os << v;
    }
  };
  for (const auto& t : traces)
    for (const auto& r : t.rows) {
      os << t.trial << ',' << r.n << ',' << r.s_a << ',' << r.s_b << ',' << r.s_m << ',';
      num(r.ratio);
      os << ',';
      num(r.run_max);
      os << ',';
      num(r.run_min);
      os << ',' << r.mid_fraction() << '\n';
    }
}

inline void write_returns_csv(std::ostream& os, const std::vector<std::pair<std::uint64_t, ReturnRecord>>& recs) {
  os << "trial,visit,side,phi,censored\n";
  for (const auto& [trial, rec] : recs)
    for (std::size_t i = 0; i < rec.y_returns.size(); ++i) {
      const auto& e = rec.y_returns[i];
      os << trial << ',' << i << ',' << (e.side == YSide::a ? "Y_A" : "Y_B") << ',' << e.phi << ','
         << (e.censored ? 1 : 0) << '\n';
    }
}

}  // namespace occlab
