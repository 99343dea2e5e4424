// Acceptance suite: one PASS/FAIL line per criterion.
//
//   zsgame_acceptance --cli <path-to-zsgame> [--criterion K]
//
// Without --criterion every criterion runs. Exit status is nonzero if any
// selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "zsgame/analysis.hpp"
#include "zsgame/engine.hpp"
#include "zsgame/experiment.hpp"

namespace fs = std::filesystem;
using namespace zsg;

namespace {

// Pinned thresholds.
constexpr double kDriftLimit = 1e-8;
constexpr double kRuntimeC1 = 5.0;
constexpr double kResidualLimit = 1e-10;
constexpr double kRuntimeC2 = 1.0;
constexpr double kOdeLimit = 1e-8;
constexpr double kOdeStep = 1e-4;
constexpr double kKsLimit = 0.03;
constexpr double kRuntimeFig2 = 30.0;
constexpr double kMoment2Lo = 0.95, kMoment2Hi = 1.05;
constexpr double kMoment3Lo = 0.85, kMoment3Hi = 1.15;
constexpr std::size_t kMinDecaySnapshots = 8;
constexpr std::uint64_t kSeed = 42;
constexpr std::size_t kN = 10'000;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("zsgame_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 1. Conservation and positivity over 10^6 matches.
Outcome conservation() {
  SimConfig c;
  c.n = kN;
  c.total_matches = 1'000'000;
  c.seed = kSeed;
  c.rule = HalfAssets{};
  c.win = WinModel(0.5);
  c.init = Constant{1.0 / kN};
  for (std::uint64_t t = 0; t <= c.total_matches; t += 100'000) c.snapshot_schedule.push_back(t);
  const auto start = std::chrono::steady_clock::now();
  const RunResult r = run(c);
  const double elapsed = seconds_since(start);
  double min_asset = INFINITY;
  for (const auto& s : r.snapshots) min_asset = std::min(min_asset, s.min_asset);
  const bool pass = r.conservation_drift < kDriftLimit && min_asset > 0.0 &&
                    r.snapshots.size() == 11 && elapsed < kRuntimeC1;
  return {pass, "drift=" + fmt("%.3e", r.conservation_drift) + " min_asset=" +
                    fmt("%.3e", min_asset) + " snapshots=" + std::to_string(r.snapshots.size()) +
                    " runtime=" + fmt("%.2fs", elapsed)};
}

// 2. Fixed-point residual of the exponential on a 20x20 grid.
Outcome fixed_point() {
  const auto start = std::chrono::steady_clock::now();
  const auto f = DensityFn::exponential(1.0);
  double worst = 0.0;
  std::size_t evaluated = 0;
  std::size_t strict_harmonic = 0;
  std::size_t skipped = 0;
  for (const double p : {0.3, 0.5, 0.7}) {
    for (int u = 0; u < 20; ++u) {
      for (int v = 0; v < 20; ++v) {
        const double a_i = 0.1 + 4.9 * u / 19.0;
        const double a_j = 0.1 + 4.9 * v / 19.0;
        // Half-assets has no point with all shifted arguments positive, so it
        // is evaluated through the exponential's analytic extension.
        worst = std::max(worst, std::abs(fixed_point_residual(f, p, HalfAssets{}, a_i, a_j,
                                                              ResidualDomain::extended)));
        worst = std::max(worst, std::abs(fixed_point_residual(f, p, Harmonic{1.0}, a_i, a_j,
                                                              ResidualDomain::extended)));
        evaluated += 2;
        try {
          worst = std::max(worst, std::abs(fixed_point_residual(f, p, Harmonic{1.0}, a_i, a_j)));
          ++strict_harmonic;
        } catch (const DomainError&) {
          ++skipped;
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  const bool pass = worst <= kResidualLimit && strict_harmonic > 0 && elapsed < kRuntimeC2;
  return {pass, "max|residual|=" + fmt("%.3e", worst) + " points=" + std::to_string(evaluated) +
                    " harmonic_strict=" + std::to_string(strict_harmonic) + " (skipped " +
                    std::to_string(skipped) + ") runtime=" + fmt("%.3fs", elapsed)};
}

// 3. Relative ODE defect of Exp(1).
Outcome ode() {
  const auto f = DensityFn::exponential(1.0);
  double worst = 0.0;
  double worst_at = 0.0;
  for (int k = 0; k <= 990; ++k) {
    const double a = 0.1 + 0.01 * k;
    const double d = std::abs(relative_ode_defect(f, a, kOdeStep));
    if (d > worst) {
      worst = d;
      worst_at = a;
    }
  }
  return {worst <= kOdeLimit,
          "max relative defect=" + fmt("%.3e", worst) + " at a=" + fmt("%.2f", worst_at)};
}

struct Fig2 {
  ExperimentReport report;
  double elapsed;
};

Fig2 run_fig2(const std::string& preset) {
  Overrides o;
  o.output_dir = scratch(preset).string();
  const std::string doc = R"({"preset":")" + preset + R"(","seed":)" + std::to_string(kSeed) +
                          R"(,"sim":{"n":)" + std::to_string(kN) + R"(,"matches":)" +
                          std::to_string(50 * kN) + "}}";  // 100 matches per player
  const ExperimentSpec spec = parse_config(doc, o);
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report = execute_experiment(spec);
  return {std::move(report), seconds_since(start)};
}

Outcome collapse(const std::string& preset) {
  const Fig2 fig = run_fig2(preset);
  bool pass = fig.elapsed < kRuntimeFig2;
  std::string detail;
  for (const auto& r : fig.report.runs) {
    pass = pass && r.gof.ks < kKsLimit;
    detail += r.name + ":ks=" + fmt("%.4f", r.gof.ks) + " ";
  }
  for (const auto& [a, b, d] : fig.report.pairwise_ks) {
    pass = pass && d < kKsLimit;
    detail += a + "/" + b + "=" + fmt("%.4f", d) + " ";
  }
  return {pass, detail + "runtime=" + fmt("%.2fs", fig.elapsed)};
}

// 6. Moment ratios on the fig2a baseline (constant start, half-assets).
Outcome moments() {
  const Fig2 fig = run_fig2("fig2a");
  const auto values = fig.report.runs.front().result.final_assets.values();
  const double m2 = moment_ratio(values, 2);
  const double m3 = moment_ratio(values, 3);
  const bool pass = m2 >= kMoment2Lo && m2 <= kMoment2Hi && m3 >= kMoment3Lo && m3 <= kMoment3Hi;
  return {pass, "run=" + fig.report.runs.front().name + " k2=" + fmt("%.4f", m2) +
                    " k3=" + fmt("%.4f", m3)};
}

// 7. Decay of a perturbation of the exponential.
Outcome stability() {
  SimConfig c;
  c.n = kN;
  c.seed = kSeed;
  c.init = Constant{1.0 / kN};
  for (std::uint64_t k = 0; k <= 16; ++k) c.snapshot_schedule.push_back(k * kN / 8);  // dt = 0.25
  c.total_matches = c.snapshot_schedule.back();

  const auto curve = run_perturbation(c, Perturbation::gamma_mixture(1.0));
  const auto floor_curve = run_perturbation(c, Perturbation::none());
  double noise_floor = 0.0;
  for (const auto& p : floor_curve) noise_floor = std::max(noise_floor, p.distance);

  std::vector<double> smooth;
  for (std::size_t k = 1; k + 1 < curve.size(); ++k) {
    smooth.push_back((curve[k - 1].distance + curve[k].distance + curve[k + 1].distance) / 3.0);
  }
  bool monotone = true;
  for (std::size_t k = 1; k < smooth.size(); ++k) monotone = monotone && smooth[k] < smooth[k - 1];

  const DecayFit fit = decay_fit(curve, noise_floor);
  const bool pass = curve.size() >= kMinDecaySnapshots && monotone && fit.rate > 0.0;
  return {pass, "snapshots=" + std::to_string(curve.size()) + " L1 " +
                    fmt("%.3f", curve.front().distance) + " -> " +
                    fmt("%.3f", curve.back().distance) + " noise_floor=" +
                    fmt("%.3f", noise_floor) + " monotone=" + (monotone ? "yes" : "no") +
                    " fitted_rate=" + fmt("%.3f", fit.rate) + " per match-per-player"};
}

// 8. Two CLI invocations with the same config and seed.
Outcome determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no --cli path given"};
  const auto base = scratch("determinism");
  fs::create_directories(base);
  const auto config = base / "config.json";
  {
    std::ofstream(config) << R"({"preset":"fig2b","seed":7,"sim":{"n":2000,"matches":100000}})";
  }
  std::vector<fs::path> outs{base / "a", base / "b"};
  for (const auto& out : outs) {
    const std::string cmd = "\"" + cli + "\" --config \"" + config.string() + "\" --output-dir \"" +
                            out.string() + "\" > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "cli failed: " + cmd};
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(outs[0])) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), outs[0]);
    const std::string a = slurp(entry.path());
    const std::string b = slurp(outs[1] / rel);
    bool same;
    if (entry.path().extension() == ".json") {
      auto ja = json::parse(a);
      auto jb = json::parse(b);
      ja.erase("timestamp");
      jb.erase("timestamp");
      same = ja.dump() == jb.dump();
    } else {
      same = a == b;
    }
    if (!same) return {false, "differs: " + rel.string()};
    ++compared;
  }
  return {compared > 0 && fs::exists(outs[0] / "summary.csv") && fs::exists(outs[0] / "summary.json"),
          std::to_string(compared) + " files identical (timestamp key excluded)"};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else if (arg == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: " << argv[0] << " --cli <zsgame> [--criterion K]\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"conservation and positivity (n=1e4, 1e6 matches)", conservation},
      {"fixed-point residual of the exponential", fixed_point},
      {"ODE defect of the exponential", ode},
      {"fig2a collapse: three initial distributions", [] { return collapse("fig2a"); }},
      {"fig2b collapse: three payment rules", [] { return collapse("fig2b"); }},
      {"moment ratios of the baseline run", moments},
      {"stability: perturbation decays", stability},
      {"determinism of CLI outputs", [&cli] { return determinism(cli); }},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only != 0 && static_cast<std::size_t>(only) != k + 1) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  C" << (k + 1) << "  " << criteria[k].first
              << "  |  " << o.detail << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
