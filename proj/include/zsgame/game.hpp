#pragma once

// Payment rules, the constant win model and single-match resolution.
//
// A match between players holding a_i and a_j: with probability p the first
// player wins and receives the second player's payment; otherwise the first
// player pays the second. The loser's payment is a function of the loser's
// own assets and always stays strictly below them.

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <variant>

#include "zsgame/bisection.hpp"
#include "zsgame/errors.hpp"
#include "zsgame/rng.hpp"

namespace zsg {

/// Loser pays half of its assets.
struct HalfAssets {
  friend bool operator==(const HalfAssets&, const HalfAssets&) = default;
};

/// Loser pays a fraction drawn uniformly from [min_fraction, max_fraction].
struct RandomFraction {
  double min_fraction = 0.25;
  double max_fraction = 0.75;
  friend bool operator==(const RandomFraction&, const RandomFraction&) = default;
};

/// Loser pays a * m / (a + m), with m the (conserved) population mean.
struct Harmonic {
  double global_mean = 1.0;
  friend bool operator==(const Harmonic&, const Harmonic&) = default;
};

using PaymentRule = std::variant<HalfAssets, RandomFraction, Harmonic>;

inline void validate(const PaymentRule& rule) {
  if (const auto* rf = std::get_if<RandomFraction>(&rule)) {
    if (!(rf->min_fraction > 0.0 && rf->min_fraction <= rf->max_fraction &&
          rf->max_fraction < 1.0)) {
      throw ConfigError(
          "random_fraction bounds must satisfy 0 < min <= max < 1 "
          "(a fraction >= 1 would bankrupt the loser)");
    }
  } else if (const auto* h = std::get_if<Harmonic>(&rule)) {
    if (!(h->global_mean > 0.0) || !std::isfinite(h->global_mean)) {
      throw ConfigError("harmonic global_mean must be positive and finite");
    }
  }
}

inline bool is_deterministic(const PaymentRule& rule) noexcept {
  return !std::holds_alternative<RandomFraction>(rule);
}

inline std::string rule_name(const PaymentRule& rule) {
  return std::visit(
      [](const auto& r) -> std::string {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, HalfAssets>) return "half_assets";
        if constexpr (std::is_same_v<T, RandomFraction>) return "random_fraction";
        if constexpr (std::is_same_v<T, Harmonic>) return "harmonic";
      },
      rule);
}

/// Constant probability that the first player of a pair wins. The second
/// player's probability is always 1 - p_first.
class WinModel {
 public:
  explicit WinModel(double p_first = 0.5) : p_first_(p_first) {
    if (!(p_first >= 0.0 && p_first <= 1.0)) {
      throw ConfigError("win probability must lie in [0, 1]");
    }
  }

  double p_first() const noexcept { return p_first_; }
  double p_second() const noexcept { return 1.0 - p_first_; }

  friend bool operator==(const WinModel&, const WinModel&) = default;

 private:
  double p_first_;
};

enum class Winner { first, second };

struct MatchOutcome {
  double new_a_i;
  double new_a_j;
  Winner winner;
  double payment;
};

/// A loser's assets split into what is paid and what is kept.
struct Stake {
  double payment;
  double retained;
};

/// g(x) = x - payment(x) for the deterministic rules, evaluated without the
/// cancellation of a literal subtraction.
inline double retained_after_loss(const PaymentRule& rule, double a) {
  if (std::holds_alternative<HalfAssets>(rule)) return 0.5 * a;
  if (const auto* h = std::get_if<Harmonic>(&rule)) return a * (a / (a + h->global_mean));
  throw NotInvertibleError("random_fraction payments are stochastic");
}

namespace detail {

// Assumes the rule has been validated and a > 0. The smaller of the two
// parts is computed directly and the other by subtraction, so the parts sum
// to a within half an ulp. When the exact remainder is below the resolution
// of a (harmonic losses shrink assets doubly exponentially) the payment is
// clamped to the largest double below a, leaving the loser one ulp.
inline Stake split_stake(const PaymentRule& rule, double a, Rng& rng) noexcept {
  double payment;
  if (std::holds_alternative<HalfAssets>(rule)) {
    payment = 0.5 * a;
  } else if (const auto* rf = std::get_if<RandomFraction>(&rule)) {
    const double fraction =
        rf->min_fraction == rf->max_fraction ? rf->min_fraction
                                             : rng.uniform(rf->min_fraction, rf->max_fraction);
    payment = a * fraction;
  } else {
    const double m = std::get<Harmonic>(rule).global_mean;
    payment = a <= m ? a - a * (a / (a + m)) : a * (m / (a + m));
  }
  if (!(payment < a)) payment = std::nextafter(a, 0.0);
  return {payment, a - payment};
}

}  // namespace detail

/// The amount a loser holding a pays. Deterministic rules ignore rng.
inline double payment_amount(const PaymentRule& rule, double a, Rng& rng) {
  validate(rule);
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("assets must be positive and finite");
  return detail::split_stake(rule, a, rng).payment;
}

namespace detail {

inline MatchOutcome resolve_match_unchecked(double a_i, double a_j, const WinModel& win,
                                            const PaymentRule& rule, Rng& rng) noexcept {
  if (rng.uniform() < win.p_first()) {
    const Stake s = split_stake(rule, a_j, rng);
    return {a_i + s.payment, s.retained, Winner::first, s.payment};
  }
  const Stake s = split_stake(rule, a_i, rng);
  return {s.retained, a_j + s.payment, Winner::second, s.payment};
}

}  // namespace detail

/// Plays one match. The draw deciding the winner is taken first, then any
/// draw the loser's payment rule needs.
inline MatchOutcome resolve_match(double a_i, double a_j, const WinModel& win,
                                  const PaymentRule& rule, Rng& rng) {
  validate(rule);
  if (!(a_i > 0.0) || !(a_j > 0.0)) throw DomainError("assets must be positive");
  return detail::resolve_match_unchecked(a_i, a_j, win, rule, rng);
}

/// Assets a' a player held before paying, i.e. the solution of
/// a' - payment(a') = a. Half-assets has the closed form 2a; the harmonic
/// rule is bisected.
inline double inverse_pre_asset(const PaymentRule& rule, double a) {
  validate(rule);
  if (!is_deterministic(rule)) {
    throw NotInvertibleError("random_fraction payments are stochastic and cannot be inverted");
  }
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("assets must be positive and finite");
  if (std::holds_alternative<HalfAssets>(rule)) return 2.0 * a;
  return invert_increasing_below_identity(
      [&rule](double x) { return retained_after_loss(rule, x); }, a);
}

}  // namespace zsg
