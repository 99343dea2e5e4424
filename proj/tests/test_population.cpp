#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "zsgame/population.hpp"

namespace zsg {
namespace {

double ulp_distance(double x, double y) {
  return std::abs(x - y) / (std::nextafter(y, INFINITY) - y);
}

TEST(AssetVector, RejectsTinyOrNonPositivePopulations) {
  EXPECT_THROW(AssetVector({1.0}), ConfigError);
  EXPECT_THROW(AssetVector({1.0, 0.0}), ConfigError);
  EXPECT_THROW(AssetVector({1.0, -1.0}), ConfigError);
  EXPECT_NO_THROW(AssetVector({1.0, 1.0}));
}

TEST(TotalAssets, SmallVector) {
  EXPECT_EQ(total_assets(AssetVector({1.0, 2.0, 3.0})), 6.0);
}

TEST(TotalAssets, ManyEqualSmallEntries) {
  const AssetVector v(std::vector<double>(100'000, 1e-5));
  EXPECT_NEAR(total_assets(v), 1.0, 1e-12);
}

TEST(TotalAssets, MatchesExtendedPrecisionOracle) {
  using Quad = boost::multiprecision::cpp_bin_float_quad;
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> values(50'000);
    for (double& v : values) v = std::exp(rng.uniform(-20.0, 20.0));
    Quad exact = 0;
    for (const double v : values) exact += v;
    const double got = total_assets(AssetVector(values));
    const double want = exact.convert_to<double>();
    EXPECT_LE(std::abs(got - want) / want, 1e-13);
  }
}

TEST(MeanAssets, Basics) {
  EXPECT_EQ(mean_assets(AssetVector({1.0, 3.0})), 2.0);
  EXPECT_EQ(mean_assets(AssetVector(std::vector<double>(10, 0.7))), 0.7);
}

TEST(InitPopulation, ConstantOneOverN) {
  Rng rng(1);
  const auto v = init_population(Constant{1e-5}, 100'000, rng);
  ASSERT_EQ(v.size(), 100'000u);
  for (const double a : v.values()) ASSERT_EQ(a, 1e-5);
  EXPECT_NEAR(total_assets(v), 1.0, 1e-12);
}

TEST(InitPopulation, UniformRescaledHitsTargetMean) {
  Rng rng(2);
  const auto v = init_population(UniformRescaled{0.0, 1.0, 1e-5}, 10'000, rng);
  for (const double a : v.values()) ASSERT_GT(a, 0.0);
  EXPECT_LE(ulp_distance(mean_assets(v), 1e-5), 1.0);
  // U(0,1) has mean 1/2, so rescaled entries stay below about 2 * target.
  EXPECT_LT(v.max(), 2.1e-5);
}

TEST(InitPopulation, TruncatedNormalRescaled) {
  Rng rng(3);
  const auto v = init_population(TruncatedNormalRescaled{1.0, 0.2, 1.0}, 10'000, rng);
  for (const double a : v.values()) ASSERT_GT(a, 0.0);
  EXPECT_LE(ulp_distance(mean_assets(v), 1.0), 1.0);
}

TEST(InitPopulation, HeavilyTruncatedNormalStaysPositive) {
  // Rejection oracle: with mu = 0 half the draws are rejected; the survivors
  // follow a half-normal, whose mean is sigma * sqrt(2/pi) before rescaling.
  Rng rng(4);
  std::vector<double> raw;
  Rng probe(4);
  for (int k = 0; k < 10'000; ++k) {
    double x;
    do {
      x = probe.normal(0.0, 1.0);
    } while (!(x > 0.0));
    raw.push_back(x);
  }
  const double raw_mean = compensated_sum(raw) / raw.size();
  EXPECT_NEAR(raw_mean, std::sqrt(2.0 / M_PI), 0.02);

  const auto v = init_population(TruncatedNormalRescaled{0.0, 1.0, 3.0}, 10'000, rng);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    ASSERT_NEAR(v[k], raw[k] * 3.0 / raw_mean, 1e-12 * v[k]);
  }
  EXPECT_LE(ulp_distance(mean_assets(v), 3.0), 1.0);
}

TEST(InitPopulation, RescaleProperty) {
  Rng gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const double target = std::exp(gen.uniform(-25.0, 5.0));
    const auto n = static_cast<std::size_t>(2 + gen.index(5000));
    const InitialDistribution dist =
        trial % 2 ? InitialDistribution{UniformRescaled{0.0, 1.0, target}}
                  : InitialDistribution{TruncatedNormalRescaled{1.0, 0.5, target}};
    const auto v = init_population(dist, n, gen);
    ASSERT_LE(ulp_distance(mean_assets(v), target), 1.0) << "n=" << n;
  }
}

TEST(InitPopulation, Errors) {
  Rng rng(1);
  EXPECT_THROW(init_population(Constant{1.0}, 1, rng), ConfigError);
  EXPECT_THROW(init_population(TruncatedNormalRescaled{1.0, 0.0, 1.0}, 10, rng), ConfigError);
  EXPECT_THROW(init_population(UniformRescaled{1.0, 1.0, 1.0}, 10, rng), ConfigError);
  EXPECT_THROW(init_population(UniformRescaled{0.0, 1.0, -1.0}, 10, rng), ConfigError);
}

TEST(AssetCsv, HeaderAndSeventeenDigits) {
  std::ostringstream out;
  write_asset_csv(out, std::vector<double>{0.1, 2.0});
  EXPECT_EQ(out.str(), "asset\n1.0000000000000001e-01\n2.0000000000000000e+00\n");
}

}  // namespace
}  // namespace zsg
