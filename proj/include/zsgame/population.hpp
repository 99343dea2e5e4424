#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "zsgame/errors.hpp"
#include "zsgame/rng.hpp"
#include "zsgame/summation.hpp"

namespace zsg {

/// Population state: N >= 2 strictly positive assets plus the total recorded
/// at construction, against which conservation is monitored.
class AssetVector {
 public:
  explicit AssetVector(std::vector<double> assets) : assets_(std::move(assets)) {
    if (assets_.size() < 2) throw ConfigError("population needs at least 2 players");
    for (const double a : assets_) {
      if (!(a > 0.0) || !std::isfinite(a)) {
        throw ConfigError("every asset must be positive and finite");
      }
    }
    initial_total_ = compensated_sum(assets_);
  }

  std::size_t size() const noexcept { return assets_.size(); }
  double operator[](std::size_t i) const noexcept { return assets_[i]; }
  std::span<const double> values() const noexcept { return assets_; }

  /// Mutable access for the engine. Callers keep entries positive.
  std::span<double> mutable_values() noexcept { return assets_; }

  double initial_total() const noexcept { return initial_total_; }
  double min() const noexcept { return *std::min_element(assets_.begin(), assets_.end()); }
  double max() const noexcept { return *std::max_element(assets_.begin(), assets_.end()); }

 private:
  std::vector<double> assets_;
  double initial_total_ = 0.0;
};

inline double total_assets(const AssetVector& v) noexcept { return compensated_sum(v.values()); }

inline double mean_assets(const AssetVector& v) noexcept {
  return total_assets(v) / static_cast<double>(v.size());
}

struct Constant {
  double value;
};

/// Uniform on (lo, hi), then rescaled so the sample mean is target_mean.
struct UniformRescaled {
  double lo = 0.0;
  double hi = 1.0;
  double target_mean = 1.0;
};

/// Normal(mu, sigma) with nonpositive draws rejected and redrawn, then
/// rescaled so the sample mean is target_mean.
struct TruncatedNormalRescaled {
  double mu = 1.0;
  double sigma = 0.2;
  double target_mean = 1.0;
};

using InitialDistribution = std::variant<Constant, UniformRescaled, TruncatedNormalRescaled>;

inline double target_mean(const InitialDistribution& dist) noexcept {
  return std::visit(
      [](const auto& d) {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, Constant>) {
          return d.value;
        } else {
          return d.target_mean;
        }
      },
      dist);
}

inline std::string distribution_name(const InitialDistribution& dist) {
  switch (dist.index()) {
    case 0: return "constant";
    case 1: return "uniform_rescaled";
    default: return "truncated_normal_rescaled";
  }
}

inline void validate(const InitialDistribution& dist) {
  if (const auto* c = std::get_if<Constant>(&dist)) {
    if (!(c->value > 0.0) || !std::isfinite(c->value)) {
      throw ConfigError("constant initial assets must be positive");
    }
    return;
  }
  if (const auto* u = std::get_if<UniformRescaled>(&dist)) {
    if (!(u->lo >= 0.0)) throw ConfigError("uniform lo must be >= 0");
    if (!(u->hi > u->lo) || !std::isfinite(u->hi)) throw ConfigError("uniform needs hi > lo");
  } else {
    const auto& t = std::get<TruncatedNormalRescaled>(dist);
    if (!(t.sigma > 0.0) || !std::isfinite(t.sigma)) throw ConfigError("normal sigma must be > 0");
    if (!std::isfinite(t.mu)) throw ConfigError("normal mu must be finite");
    // Acceptance rate P(X > 0) must not be vanishing.
    if (t.mu / t.sigma < -8.0) throw ConfigError("normal mu/sigma too negative to sample");
  }
  const double m = target_mean(dist);
  if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("target_mean must be positive");
}

namespace detail {

/// Multiplicative rescale until the compensated mean hits target. The first
/// pass does nearly all the work; later passes nudge the last ulp, and the
/// closest pass is kept.
inline void rescale_to_mean(std::vector<double>& values, double target) {
  const auto n = static_cast<double>(values.size());
  std::vector<double> best = values;
  double best_error = INFINITY;
  for (int pass = 0; pass < 8; ++pass) {
    const double mean = compensated_sum(values) / n;
    const double error = std::abs(mean - target);
    if (error < best_error) {
      best_error = error;
      best = values;
    }
    if (error == 0.0) break;
    double scale = target / mean;
    if (scale == 1.0) scale = std::nextafter(1.0, mean < target ? 2.0 : 0.0);
    for (double& v : values) v *= scale;
  }
  values = std::move(best);
}

}  // namespace detail

inline AssetVector init_population(const InitialDistribution& dist, std::size_t n, Rng& rng) {
  if (n < 2) throw ConfigError("population needs at least 2 players");
  validate(dist);
  std::vector<double> values(n);
  if (const auto* c = std::get_if<Constant>(&dist)) {
    std::fill(values.begin(), values.end(), c->value);
  } else if (const auto* u = std::get_if<UniformRescaled>(&dist)) {
    for (double& v : values) v = u->lo + (u->hi - u->lo) * rng.uniform_open();
    detail::rescale_to_mean(values, u->target_mean);
  } else {
    const auto& t = std::get<TruncatedNormalRescaled>(dist);
    for (double& v : values) {
      do {
        v = rng.normal(t.mu, t.sigma);
      } while (!(v > 0.0));
    }
    detail::rescale_to_mean(values, t.target_mean);
  }
  return AssetVector(std::move(values));
}

/// Writes a double in scientific notation with 17 significant digits.
inline std::string format_sci17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

/// Single-column CSV with header `asset`.
inline void write_asset_csv(std::ostream& out, std::span<const double> assets) {
  out << "asset\n";
  for (const double a : assets) out << format_sci17(a) << '\n';
}

}  // namespace zsg
