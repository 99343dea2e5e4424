#pragma once

// Monte Carlo driver: one uniformly random pair per time step, snapshots at
// scheduled match counts, and periodic conservation checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "zsgame/analysis.hpp"
#include "zsgame/errors.hpp"
#include "zsgame/game.hpp"
#include "zsgame/population.hpp"
#include "zsgame/rng.hpp"
#include "zsgame/summation.hpp"

namespace zsg {

/// Relative drift of the population total that aborts a run.
inline constexpr double kConservationTolerance = 1e-8;

struct SimConfig {
  std::size_t n = 10'000;
  std::uint64_t total_matches = 1'000'000;
  std::uint64_t seed = 0;
  PaymentRule rule = HalfAssets{};
  WinModel win{0.5};
  InitialDistribution init = Constant{1e-4};
  /// Match counts at which snapshots are taken; 0 means the initial state.
  std::vector<std::uint64_t> snapshot_schedule;
  /// Snapshots beyond this many keep only their histogram.
  std::size_t snapshot_copy_cap = 64;
  std::size_t snapshot_bins = 50;

  void validate() const {
    if (n < 2) throw ConfigError("n must be >= 2");
    if (total_matches < 1) throw ConfigError("total_matches must be >= 1");
    if (snapshot_bins < 1) throw ConfigError("snapshot_bins must be >= 1");
    zsg::validate(rule);
    zsg::validate(init);
    if (!std::is_sorted(snapshot_schedule.begin(), snapshot_schedule.end())) {
      throw ConfigError("snapshot schedule must be sorted ascending");
    }
    if (!snapshot_schedule.empty() && snapshot_schedule.back() > total_matches) {
      throw ConfigError("snapshot scheduled after the last match");
    }
  }
};

struct Snapshot {
  std::uint64_t matches;
  std::optional<AssetVector> assets;
  Histogram histogram;
  double min_asset;
  double relative_drift;
};

struct RunResult {
  AssetVector final_assets;
  std::vector<Snapshot> snapshots;
  /// max over checkpoints of |total(t) - total(0)| / total(0)
  double conservation_drift = 0.0;
  std::uint64_t seed = 0;
};

/// Two distinct indices, uniform over ordered (hence unordered) pairs.
inline std::pair<std::size_t, std::size_t> sample_pair(std::size_t n, Rng& rng) {
  if (n < 2) throw ConfigError("sample_pair needs n >= 2");
  const auto i = static_cast<std::size_t>(rng.index(n));
  auto j = static_cast<std::size_t>(rng.index(n - 1));
  if (j >= i) ++j;
  return {i, j};
}

namespace detail {

inline double relative_drift(const AssetVector& v) {
  return std::abs(total_assets(v) - v.initial_total()) / v.initial_total();
}

}  // namespace detail

/// Plays config.total_matches matches starting from `assets`, drawing from
/// `rng`. Conservation is checked every n matches and at every snapshot.
inline RunResult run_from(const SimConfig& config, AssetVector assets, Rng& rng) {
  config.validate();
  if (assets.size() != config.n) throw ConfigError("initial population size differs from n");

  RunResult result{std::move(assets), {}, 0.0, config.seed};
  AssetVector& pop = result.final_assets;
  const std::span<double> a = pop.mutable_values();
  const std::size_t n = pop.size();

  auto checkpoint = [&](std::uint64_t t) {
    const double drift = detail::relative_drift(pop);
    result.conservation_drift = std::max(result.conservation_drift, drift);
    if (!(drift <= kConservationTolerance)) {
      throw IntegrityError("conservation drift " + format_sci17(drift) + " after " +
                           std::to_string(t) + " matches (seed " + std::to_string(config.seed) +
                           ")");
    }
    return drift;
  };

  auto take_snapshot = [&](std::uint64_t t) {
    const double drift = checkpoint(t);
    const double lowest = pop.min();
    if (!(lowest > 0.0)) {
      throw IntegrityError("nonpositive asset after " + std::to_string(t) + " matches");
    }
    std::optional<AssetVector> copy;
    if (result.snapshots.size() < config.snapshot_copy_cap) copy = pop;
    result.snapshots.push_back(
        {t, std::move(copy), make_histogram(pop.values(), config.snapshot_bins), lowest, drift});
  };

  auto next_snap = config.snapshot_schedule.begin();
  const auto snap_end = config.snapshot_schedule.end();
  while (next_snap != snap_end && *next_snap == 0) {
    take_snapshot(0);
    ++next_snap;
  }

  const auto checkpoint_every = static_cast<std::uint64_t>(n);
  for (std::uint64_t t = 1; t <= config.total_matches; ++t) {
    const auto [i, j] = sample_pair(n, rng);
    const MatchOutcome out = detail::resolve_match_unchecked(a[i], a[j], config.win, config.rule, rng);
    a[i] = out.new_a_i;
    a[j] = out.new_a_j;

    bool snapped = false;
    while (next_snap != snap_end && *next_snap == t) {
      take_snapshot(t);
      ++next_snap;
      snapped = true;
    }
    if (!snapped && t % checkpoint_every == 0) checkpoint(t);
  }
  checkpoint(config.total_matches);
  return result;
}

/// Runs config from its initial distribution. Bit-identical for equal configs.
inline RunResult run(const SimConfig& config) {
  config.validate();
  Rng rng(config.seed);
  AssetVector initial = init_population(config.init, config.n, rng);
  return run_from(config, std::move(initial), rng);
}

/// Reweighting of the exponential law used to start the stability
/// experiment. With x = a / mean, the initial density is w(x) e^{-x} / mean.
/// w must be nonnegative, bounded by max_weight, and keep both the total mass
/// and the mean: int w e^{-x} dx = int x w e^{-x} dx = 1.
struct Perturbation {
  std::string name;
  std::function<double(double)> weight;
  double max_weight = 1.0;

  static Perturbation none() {
    return {"none", [](double) { return 1.0; }, 1.0};
  }

  /// Mixture (1 - eps) Exp(1) + eps Gamma(2, 1/2); the gamma component has
  /// the same mean and vanishes at zero.
  static Perturbation gamma_mixture(double eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw ConfigError("gamma_mixture eps must lie in [0, 1]");
    return {"gamma_mixture",
            [eps](double x) { return (1.0 - eps) + eps * 4.0 * x * std::exp(-x); },
            (1.0 - eps) + eps * 4.0 / std::numbers::e};
  }
};

inline void validate(const Perturbation& p, double tol = 1e-6) {
  if (!p.weight) throw ConfigError("perturbation has no weight function");
  boost::math::quadrature::exp_sinh<double> integrator;
  const double mass = integrator.integrate([&](double x) { return p.weight(x) * std::exp(-x); });
  const double first = integrator.integrate([&](double x) { return x * p.weight(x) * std::exp(-x); });
  if (std::abs(mass - 1.0) > tol) {
    throw ConfigError("perturbation changes total mass (integral " + format_sci17(mass) + ")");
  }
  if (std::abs(first - 1.0) > tol) {
    throw ConfigError("perturbation changes the mean (first moment " + format_sci17(first) + ")");
  }
}

/// Exponential samples with the given mean, reweighted by rejection and
/// rescaled to the exact mean.
inline AssetVector sample_perturbed_exponential(const Perturbation& p, double mean, std::size_t n,
                                                Rng& rng) {
  validate(p);
  if (!(mean > 0.0)) throw ConfigError("mean must be positive");
  std::vector<double> values(n);
  for (double& v : values) {
    for (;;) {
      const double x = rng.exponential(1.0);
      const double w = p.weight(x);
      if (w < 0.0 || w > p.max_weight) {
        throw ConfigError("perturbation weight outside [0, max_weight] at x = " + format_sci17(x));
      }
      if (rng.uniform() * p.max_weight < w) {
        v = mean * x;
        break;
      }
    }
  }
  detail::rescale_to_mean(values, mean);
  return AssetVector(std::move(values));
}

/// Stability experiment: start near the exponential fixed point and record
/// the L1 distance of each snapshot's histogram to the exponential density,
/// indexed by expected matches per player, 2 * matches / n. The mean comes
/// from config.init.
inline std::vector<DecayPoint> run_perturbation(const SimConfig& config,
                                                const Perturbation& perturbation) {
  config.validate();
  const double mean = target_mean(config.init);
  Rng rng(config.seed);
  AssetVector initial = sample_perturbed_exponential(perturbation, mean, config.n, rng);
  const RunResult result = run_from(config, std::move(initial), rng);

  const DensityFn reference = DensityFn::exponential(mean);
  std::vector<DecayPoint> points;
  points.reserve(result.snapshots.size());
  for (const auto& s : result.snapshots) {
    points.push_back({2.0 * static_cast<double>(s.matches) / static_cast<double>(config.n),
                      l1_distance(s.histogram, reference)});
  }
  return points;
}

/// Averages the decay curves of independent replicas (seeds derived from
/// config.seed). Replicas share the snapshot schedule, so times align.
inline std::vector<DecayPoint> run_perturbation_replicas(const SimConfig& config,
                                                         const Perturbation& perturbation,
                                                         std::size_t replicas) {
  if (replicas < 1) throw ConfigError("need at least one replica");
  std::vector<DecayPoint> mean_curve;
  for (std::size_t r = 0; r < replicas; ++r) {
    SimConfig c = config;
    c.seed = derive_seed(config.seed, r);
    const auto curve = run_perturbation(c, perturbation);
    if (mean_curve.empty()) {
      mean_curve = curve;
    } else {
      for (std::size_t k = 0; k < curve.size(); ++k) mean_curve[k].distance += curve[k].distance;
    }
  }
  for (auto& p : mean_curve) p.distance /= static_cast<double>(replicas);
  return mean_curve;
}

}  // namespace zsg
