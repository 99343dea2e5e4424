#pragma once

// Statistics of an asset sample against the exponential law, and numerical
// checks of the exponential fixed point of the pair-exchange dynamics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "zsgame/errors.hpp"
#include "zsgame/game.hpp"
#include "zsgame/summation.hpp"

namespace zsg {

enum class Binning { linear, log };

struct Range {
  double lo;
  double hi;
};

/// Density-normalized histogram. Densities integrate to one over the samples
/// that fell inside the range; `excluded` counts the rest.
struct Histogram {
  std::vector<double> edges;
  std::vector<double> densities;
  std::size_t counted = 0;
  std::size_t excluded = 0;

  std::size_t bins() const noexcept { return densities.size(); }
  double width(std::size_t b) const noexcept { return edges[b + 1] - edges[b]; }
  double midpoint(std::size_t b) const noexcept { return 0.5 * (edges[b] + edges[b + 1]); }
};

/// Auto range is [0, max] for linear bins and [min, max] for log bins.
inline Histogram make_histogram(std::span<const double> values, std::size_t bins,
                                std::optional<Range> range = std::nullopt,
                                Binning binning = Binning::linear) {
  if (values.empty()) throw ConfigError("histogram of an empty sample");
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  Range r = range.value_or(Range{binning == Binning::log ? *min_it : 0.0, *max_it});
  if (r.hi == r.lo && !range) r.hi = r.lo + (r.lo > 0.0 ? r.lo : 1.0);
  if (!(r.hi > r.lo)) throw ConfigError("histogram range needs hi > lo");
  if (binning == Binning::log && !(r.lo > 0.0)) {
    throw ConfigError("log binning needs a positive lower edge");
  }

  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    const double frac = static_cast<double>(b) / static_cast<double>(bins);
    h.edges[b] = binning == Binning::linear ? r.lo + (r.hi - r.lo) * frac
                                            : r.lo * std::pow(r.hi / r.lo, frac);
  }
  h.edges.front() = r.lo;
  h.edges.back() = r.hi;

  std::vector<std::size_t> counts(bins, 0);
  for (const double v : values) {
    if (v < r.lo || v > r.hi) {
      ++h.excluded;
      continue;
    }
    auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
    auto b = static_cast<std::size_t>(it - h.edges.begin());
    b = std::min(b == 0 ? 0 : b - 1, bins - 1);  // right edge goes to the last bin
    ++counts[b];
    ++h.counted;
  }
  h.densities.resize(bins);
  const double total = h.counted == 0 ? 1.0 : static_cast<double>(h.counted);
  for (std::size_t b = 0; b < bins; ++b) {
    h.densities[b] = static_cast<double>(counts[b]) / (total * h.width(b));
  }
  return h;
}

/// A density on the real line with a declared mean. Each built-in is
/// evaluated by its closed-form expression everywhere: the exponential by
/// its analytic extension, the uniform as an indicator.
///
/// Built-ins also carry a quad-precision evaluator, used where a formula
/// cancels too much to be evaluated in double (see ode_defect).
class DensityFn {
 public:
  using Wide = boost::multiprecision::cpp_bin_float_quad;

  DensityFn(std::string name, std::function<double(double)> f, double mean,
            std::function<Wide(const Wide&)> wide = {})
      : name_(std::move(name)), f_(std::move(f)), wide_(std::move(wide)), mean_(mean) {}

  double operator()(double x) const { return f_(x); }
  double mean() const noexcept { return mean_; }
  const std::string& name() const noexcept { return name_; }

  bool has_wide() const noexcept { return static_cast<bool>(wide_); }
  Wide wide(const Wide& x) const { return wide_ ? wide_(x) : Wide(f_(static_cast<double>(x))); }

  static DensityFn exponential(double mean) {
    if (!(mean > 0.0)) throw ConfigError("exponential mean must be positive");
    return {"exponential", [mean](double x) { return std::exp(-x / mean) / mean; }, mean,
            [mean](const Wide& x) -> Wide { return exp(-x / mean) / mean; }};
  }

  static DensityFn uniform(double lo, double hi) {
    if (!(hi > lo)) throw ConfigError("uniform density needs hi > lo");
    const double height = 1.0 / (hi - lo);
    return {"uniform", [lo, hi, height](double x) { return x > lo && x < hi ? height : 0.0; },
            0.5 * (lo + hi),
            [lo, hi, height](const Wide& x) -> Wide { return x > lo && x < hi ? height : 0.0; }};
  }

  static DensityFn gaussian(double mu, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("gaussian sigma must be positive");
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    return {"gaussian",
            [mu, sigma, norm](double x) {
              const double z = (x - mu) / sigma;
              return norm * std::exp(-0.5 * z * z);
            },
            mu,
            [mu, sigma](const Wide& x) -> Wide {
              const Wide z = (x - mu) / sigma;
              return exp(-z * z / 2) / (sigma * sqrt(2 * acos(Wide(-1))));
            }};
  }

 private:
  std::string name_;
  std::function<double(double)> f_;
  std::function<Wide(const Wide&)> wide_;
  double mean_;
};

/// Sup-distance between the empirical CDF and 1 - exp(-a/mean).
inline double ks_exponential(std::span<const double> values, double mean) {
  if (!(mean > 0.0)) throw ConfigError("ks_exponential: mean must be positive");
  if (values.empty()) throw ConfigError("ks_exponential: empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const double cdf = -std::expm1(-sorted[k] / mean);
    d = std::max({d, std::abs(cdf - static_cast<double>(k + 1) / n),
                  std::abs(cdf - static_cast<double>(k) / n)});
  }
  return d;
}

/// Two-sample KS statistic; ties across samples are stepped together.
inline double ks_two_sample(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw ConfigError("ks_two_sample: empty sample");
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> b(y.begin(), y.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Sum over bins of |density - ref(midpoint)| * width.
inline double l1_distance(const Histogram& h, const DensityFn& ref) {
  CompensatedSum acc;
  for (std::size_t b = 0; b < h.bins(); ++b) {
    acc.add(std::abs(h.densities[b] - ref(h.midpoint(b))) * h.width(b));
  }
  return acc.value();
}

/// <a^k> / (k! <a>^k); equals 1 for every k on an exponential population.
inline double moment_ratio(std::span<const double> values, int k) {
  if (k < 1 || k > 4) throw ConfigError("moment order must be in 1..4");
  if (values.empty()) throw ConfigError("moment_ratio: empty sample");
  const double n = static_cast<double>(values.size());
  const double mean = compensated_sum(values) / n;
  if (k == 1) return mean / mean;
  CompensatedSum acc;
  for (const double v : values) acc.add(std::pow(v, k));
  double factorial = 1.0;
  for (int i = 2; i <= k; ++i) factorial *= i;
  return (acc.value() / n) / (factorial * std::pow(mean, k));
}

/// How the fixed-point residual treats shifted arguments that leave (0, inf).
enum class ResidualDomain {
  /// Reject with DomainError.
  strict,
  /// Evaluate the density's closed form there (zero for the uniform,
  /// the analytic continuation for the exponential).
  extended,
};

namespace detail {

inline double deterministic_payment(const PaymentRule& rule, double x) {
  if (std::holds_alternative<HalfAssets>(rule)) return 0.5 * x;
  const double m = std::get<Harmonic>(rule).global_mean;
  return x * m / (x + m);
}

}  // namespace detail

/// Stationarity residual of the pair density f(a_i) f(a_j):
///   f(a_i) f(a_j) - [ p  f(a_i + d_i) f(a_j - d_i)
///                   + (1-p) f(a_i - d_j) f(a_j + d_j) ]
/// where d_i is the payment made from the pre-asset of a_i (and d_j likewise).
inline double fixed_point_residual(const DensityFn& f, double p_i, const PaymentRule& rule,
                                   double a_i, double a_j,
                                   ResidualDomain domain = ResidualDomain::strict) {
  validate(rule);
  if (!is_deterministic(rule)) {
    throw NotInvertibleError("fixed-point residual needs a deterministic payment rule");
  }
  if (!(p_i > 0.0 && p_i < 1.0)) throw ConfigError("p_i must lie in (0, 1)");
  if (!(a_i > 0.0) || !(a_j > 0.0)) throw DomainError("assets must be positive");

  const double d_i = detail::deterministic_payment(rule, inverse_pre_asset(rule, a_i));
  const double d_j = detail::deterministic_payment(rule, inverse_pre_asset(rule, a_j));
  const double i_won_from = a_i + d_i;
  const double j_lost_to = a_j - d_i;
  const double i_lost_to = a_i - d_j;
  const double j_won_from = a_j + d_j;
  if (domain == ResidualDomain::strict && !(j_lost_to > 0.0 && i_lost_to > 0.0)) {
    throw DomainError("shifted assets leave (0, inf)");
  }
  return f(a_i) * f(a_j) -
         (p_i * f(i_won_from) * f(j_lost_to) + (1.0 - p_i) * f(i_lost_to) * f(j_won_from));
}

/// f f'' - (f')^2 by central differences. The step is rounded so that a + h
/// and a - h are exactly representable.
inline double ode_defect(const DensityFn& f, double a, double h) {
  if (!(h > 0.0)) throw DomainError("ode_defect: step must be positive");
  if (!(h < a)) throw DomainError("ode_defect: step too large (h >= a)");
  const double step = (a + h) - a;
  if (!f.has_wide()) {
    const double fp = f(a + step);
    const double f0 = f(a);
    const double fm = f(a - step);
    const double d1 = (fp - fm) / (2.0 * step);
    const double d2 = (fp - 2.0 * f0 + fm) / (step * step);
    return f0 * d2 - d1 * d1;
  }
  // In double the second difference loses about 4 eps / h^2 relative, which
  // swamps the O(h^2) truncation error at h ~ 1e-4.
  using W = DensityFn::Wide;
  const W x = a;
  const W s = step;
  const W fp = f.wide(x + s);
  const W f0 = f.wide(x);
  const W fm = f.wide(x - s);
  const W d1 = (fp - fm) / (2 * s);
  const W d2 = (fp - 2 * f0 + fm) / (s * s);
  return static_cast<double>(f0 * d2 - d1 * d1);
}

/// ode_defect scaled by f(a)^2.
inline double relative_ode_defect(const DensityFn& f, double a, double h) {
  const double fa = f(a);
  return ode_defect(f, a, h) / (fa * fa);
}

struct DecayPoint {
  double t_per_player;
  double distance;
};

struct DecayFit {
  double rate;
  double intercept;
  std::size_t used;
};

/// Least-squares line through (t, ln d) over points with d above noise_floor.
/// rate is the negated slope.
inline DecayFit decay_fit(std::span<const DecayPoint> points, double noise_floor = 0.0) {
  std::vector<std::pair<double, double>> usable;
  for (const auto& p : points) {
    if (p.distance > noise_floor && p.distance > 0.0) {
      usable.emplace_back(p.t_per_player, std::log(p.distance));
    }
  }
  if (usable.size() < 3) throw DomainError("decay_fit needs at least 3 points above the floor");
  const double n = static_cast<double>(usable.size());
  double mt = 0.0;
  double my = 0.0;
  for (const auto& [t, y] : usable) {
    mt += t;
    my += y;
  }
  mt /= n;
  my /= n;
  double stt = 0.0;
  double sty = 0.0;
  for (const auto& [t, y] : usable) {
    stt += (t - mt) * (t - mt);
    sty += (t - mt) * (y - my);
  }
  if (!(stt > 0.0)) throw DomainError("decay_fit needs distinct times");
  const double slope = sty / stt;
  return {-slope, my - slope * mt, usable.size()};
}

struct GofReport {
  double ks = 0.0;
  double l1 = 0.0;
  std::vector<std::pair<int, double>> moment_ratios;
};

inline GofReport gof_report(std::span<const double> values, double mean, std::size_t bins,
                            std::span<const int> moment_orders,
                            Binning binning = Binning::linear) {
  GofReport r;
  r.ks = ks_exponential(values, mean);
  r.l1 = l1_distance(make_histogram(values, bins, std::nullopt, binning),
                     DensityFn::exponential(mean));
  for (const int k : moment_orders) r.moment_ratios.emplace_back(k, moment_ratio(values, k));
  return r;
}

}  // namespace zsg
