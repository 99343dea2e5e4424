#pragma once

// Experiment specs, the fig2a/fig2b presets, and CSV/JSON emission.
//
// Config document (JSON, unknown keys rejected):
//   { "preset": "fig2a" | "fig2b" | "custom",
//     "seed": <u64>,                       optional; generated and logged if absent
//     "output_dir": "<path>",
//     "sim": { "n", "matches", "p_win", "snapshots": [..], "snapshot_copy_cap",
//              "rule": ..., "init": ... },   rule/init only for "custom"
//     "analysis": { "bins", "moment_orders", "binning", "ks_threshold" } }

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "zsgame/analysis.hpp"
#include "zsgame/engine.hpp"
#include "zsgame/errors.hpp"
#include "zsgame/game.hpp"
#include "zsgame/population.hpp"
#include "zsgame/rng.hpp"

namespace zsg {

using nlohmann::json;

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int integrity = 3;
inline constexpr int io = 4;
}  // namespace exit_code

enum class Preset { fig2a, fig2b, custom };

inline std::string preset_name(Preset p) {
  switch (p) {
    case Preset::fig2a: return "fig2a";
    case Preset::fig2b: return "fig2b";
    default: return "custom";
  }
}

struct AnalysisSpec {
  std::size_t bins = 50;
  std::vector<int> moment_orders{1, 2, 3, 4};
  Binning binning = Binning::linear;
  /// Applied both to KS against the exponential and to pairwise two-sample KS.
  double ks_threshold = 0.03;
};

struct SubRun {
  std::string name;
  SimConfig sim;
};

struct ExperimentSpec {
  Preset preset = Preset::custom;
  std::uint64_t seed = 0;
  bool seed_generated = false;
  std::size_t n = 10'000;
  std::uint64_t matches = 1'000'000;
  std::vector<SubRun> runs;
  AnalysisSpec analysis;
  std::filesystem::path output_dir = "out";
};

/// Command-line values that replace the corresponding config entries.
struct Overrides {
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> matches;
  std::optional<std::size_t> bins;
};

inline void apply_overrides(json& doc, const Overrides& o) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (o.preset) doc["preset"] = *o.preset;
  if (o.seed) doc["seed"] = *o.seed;
  if (o.output_dir) doc["output_dir"] = *o.output_dir;
  if (o.n) doc["sim"]["n"] = *o.n;
  if (o.matches) doc["sim"]["matches"] = *o.matches;
  if (o.bins) doc["analysis"]["bins"] = *o.bins;
}

// ---------------------------------------------------------------------------
// JSON <-> domain types

namespace detail {

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                                std::string_view where) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline double get_number(const json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key) || !obj.at(key).is_number()) {
    throw ConfigError(std::string(where) + " needs numeric '" + key + "'");
  }
  return obj.at(key).get<double>();
}

inline std::uint64_t get_count(const json& obj, const char* key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) throw ConfigError(std::string("'") + key + "' must be a count");
  return v.get<std::uint64_t>();
}

// Harmonic rules given as {"harmonic": {}} bind to the initial population
// mean; JSON cannot encode -inf, so it serves as the unbound placeholder.
inline constexpr double kBindToPopulationMean = -std::numeric_limits<double>::infinity();

inline PaymentRule parse_rule(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "half_assets") return HalfAssets{};
    if (s == "harmonic") return Harmonic{kBindToPopulationMean};
    if (s == "random_fraction") return RandomFraction{};
    throw ConfigError("unknown payment rule '" + s + "'");
  }
  if (!j.is_object() || j.size() != 1) {
    throw ConfigError("rule must be a name or a single-key object");
  }
  const auto& [key, body] = *j.items().begin();
  if (key == "half_assets") return HalfAssets{};
  if (key == "random_fraction") {
    RandomFraction rf;
    if (body.is_array()) {
      if (body.size() != 2 || !body[0].is_number() || !body[1].is_number()) {
        throw ConfigError("random_fraction expects [min_fraction, max_fraction]");
      }
      rf = {body[0].get<double>(), body[1].get<double>()};
    } else {
      reject_unknown_keys(body, {"min_fraction", "max_fraction"}, "random_fraction");
      rf.min_fraction = get_or(body, "min_fraction", rf.min_fraction);
      rf.max_fraction = get_or(body, "max_fraction", rf.max_fraction);
    }
    return rf;
  }
  if (key == "harmonic") {
    reject_unknown_keys(body, {"global_mean"}, "harmonic");
    if (!body.contains("global_mean")) return Harmonic{kBindToPopulationMean};
    return Harmonic{get_number(body, "global_mean", "harmonic")};
  }
  throw ConfigError("unknown payment rule '" + key + "'");
}

inline InitialDistribution parse_init(const json& j) {
  if (!j.is_object() || j.size() != 1) throw ConfigError("init must be a single-key object");
  const auto& [key, body] = *j.items().begin();
  if (key == "constant") {
    if (!body.is_number()) throw ConfigError("constant expects a number");
    return Constant{body.get<double>()};
  }
  if (key == "uniform_rescaled") {
    reject_unknown_keys(body, {"lo", "hi", "target_mean"}, "uniform_rescaled");
    return UniformRescaled{get_number(body, "lo", key), get_number(body, "hi", key),
                           get_number(body, "target_mean", key)};
  }
  if (key == "truncated_normal_rescaled") {
    reject_unknown_keys(body, {"mu", "sigma", "target_mean"}, "truncated_normal_rescaled");
    return TruncatedNormalRescaled{get_number(body, "mu", key), get_number(body, "sigma", key),
                                   get_number(body, "target_mean", key)};
  }
  throw ConfigError("unknown initial distribution '" + key + "'");
}

}  // namespace detail

inline json to_json(const PaymentRule& rule) {
  if (const auto* rf = std::get_if<RandomFraction>(&rule)) {
    return {{"random_fraction", {rf->min_fraction, rf->max_fraction}}};
  }
  if (const auto* h = std::get_if<Harmonic>(&rule)) {
    return {{"harmonic", {{"global_mean", h->global_mean}}}};
  }
  return "half_assets";
}

inline json to_json(const InitialDistribution& dist) {
  if (const auto* c = std::get_if<Constant>(&dist)) return {{"constant", c->value}};
  if (const auto* u = std::get_if<UniformRescaled>(&dist)) {
    return {{"uniform_rescaled", {{"lo", u->lo}, {"hi", u->hi}, {"target_mean", u->target_mean}}}};
  }
  const auto& t = std::get<TruncatedNormalRescaled>(dist);
  return {{"truncated_normal_rescaled",
           {{"mu", t.mu}, {"sigma", t.sigma}, {"target_mean", t.target_mean}}}};
}

inline json to_json(const SimConfig& c) {
  return {{"n", c.n},
          {"matches", c.total_matches},
          {"seed", c.seed},
          {"p_win", c.win.p_first()},
          {"rule", to_json(c.rule)},
          {"init", to_json(c.init)},
          {"snapshots", c.snapshot_schedule},
          {"snapshot_copy_cap", c.snapshot_copy_cap},
          {"snapshot_bins", c.snapshot_bins}};
}

inline json to_json(const GofReport& r) {
  json moments = json::array();
  for (const auto& [k, ratio] : r.moment_ratios) moments.push_back({{"k", k}, {"ratio", ratio}});
  return {{"ks", r.ks}, {"l1", r.l1}, {"moment_ratios", moments}};
}

inline void write_histogram_csv(std::ostream& out, const Histogram& h) {
  out << "bin_left,bin_right,density\n";
  for (std::size_t b = 0; b < h.bins(); ++b) {
    out << format_sci17(h.edges[b]) << ',' << format_sci17(h.edges[b + 1]) << ','
        << format_sci17(h.densities[b]) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Parsing

/// Five evenly spaced snapshots from the initial state to the final match.
inline std::vector<std::uint64_t> default_schedule(std::uint64_t matches) {
  std::vector<std::uint64_t> s;
  for (std::uint64_t k = 0; k <= 4; ++k) s.push_back(matches / 4 * k);
  s.back() = matches;
  return s;
}

inline ExperimentSpec parse_config_document(const json& doc) {
  using namespace detail;
  reject_unknown_keys(doc, {"preset", "seed", "output_dir", "sim", "analysis"}, "config");

  ExperimentSpec spec;
  const auto preset = get_or<std::string>(doc, "preset", "custom");
  if (preset == "fig2a") {
    spec.preset = Preset::fig2a;
  } else if (preset == "fig2b") {
    spec.preset = Preset::fig2b;
  } else if (preset == "custom") {
    spec.preset = Preset::custom;
  } else {
    throw ConfigError("unknown preset '" + preset + "'");
  }

  if (doc.contains("seed")) {
    spec.seed = get_count(doc, "seed", 0);
  } else {
    std::random_device rd;
    spec.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    spec.seed_generated = true;
  }
  spec.output_dir = get_or<std::string>(doc, "output_dir", "out");

  const json sim = doc.value("sim", json::object());
  reject_unknown_keys(sim, {"n", "matches", "p_win", "snapshots", "snapshot_copy_cap", "rule", "init"},
                      "sim");
  spec.n = get_count(sim, "n", 10'000);
  if (spec.n < 2) throw ConfigError("sim.n must be >= 2");
  spec.matches = get_count(sim, "matches", 100 * static_cast<std::uint64_t>(spec.n));
  if (spec.matches < 1) throw ConfigError("sim.matches must be >= 1");
  const WinModel win(get_or(sim, "p_win", 0.5));
  std::vector<std::uint64_t> schedule = default_schedule(spec.matches);
  if (sim.contains("snapshots")) {
    schedule.clear();
    for (const auto& s : sim.at("snapshots")) {
      if (!s.is_number_unsigned()) throw ConfigError("snapshots must be match counts");
      schedule.push_back(s.get<std::uint64_t>());
    }
  }
  const std::size_t copy_cap = get_count(sim, "snapshot_copy_cap", 64);

  if (spec.preset != Preset::custom && (sim.contains("rule") || sim.contains("init"))) {
    throw ConfigError("preset " + preset + " fixes rule and init; use preset custom to set them");
  }

  const json an = doc.value("analysis", json::object());
  reject_unknown_keys(an, {"bins", "moment_orders", "binning", "ks_threshold"}, "analysis");
  spec.analysis.bins = get_count(an, "bins", 50);
  if (spec.analysis.bins < 1) throw ConfigError("analysis.bins must be >= 1");
  spec.analysis.moment_orders = get_or(an, "moment_orders", spec.analysis.moment_orders);
  for (const int k : spec.analysis.moment_orders) {
    if (k < 1 || k > 4) throw ConfigError("moment orders must lie in 1..4");
  }
  const auto binning = get_or<std::string>(an, "binning", "linear");
  if (binning == "linear") {
    spec.analysis.binning = Binning::linear;
  } else if (binning == "log") {
    spec.analysis.binning = Binning::log;
  } else {
    throw ConfigError("binning must be linear or log");
  }
  spec.analysis.ks_threshold = get_or(an, "ks_threshold", spec.analysis.ks_threshold);

  const double mean = 1.0 / static_cast<double>(spec.n);
  auto make = [&](std::string name, PaymentRule rule, InitialDistribution init) {
    if (auto* h = std::get_if<Harmonic>(&rule); h && h->global_mean == kBindToPopulationMean) {
      h->global_mean = target_mean(init);
    }
    SimConfig c;
    c.n = spec.n;
    c.total_matches = spec.matches;
    c.seed = derive_seed(spec.seed, spec.runs.size());
    c.rule = rule;
    c.win = win;
    c.init = init;
    c.snapshot_schedule = schedule;
    c.snapshot_copy_cap = copy_cap;
    c.snapshot_bins = spec.analysis.bins;
    c.validate();
    spec.runs.push_back({std::move(name), std::move(c)});
  };

  switch (spec.preset) {
    case Preset::fig2a:
      make("constant", HalfAssets{}, Constant{mean});
      make("uniform", HalfAssets{}, UniformRescaled{0.0, 1.0, mean});
      make("normal", HalfAssets{}, TruncatedNormalRescaled{mean, mean / 5.0, mean});
      break;
    case Preset::fig2b:
      make("half_assets", HalfAssets{}, Constant{mean});
      make("random_fraction", RandomFraction{0.25, 0.75}, Constant{mean});
      make("harmonic", Harmonic{mean}, Constant{mean});
      break;
    case Preset::custom: {
      const PaymentRule rule = sim.contains("rule") ? parse_rule(sim.at("rule")) : HalfAssets{};
      const InitialDistribution init =
          sim.contains("init") ? parse_init(sim.at("init")) : InitialDistribution{Constant{mean}};
      make("custom", rule, init);
      break;
    }
  }
  return spec;
}

inline ExperimentSpec parse_config(std::string_view text, const Overrides& overrides = {}) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  apply_overrides(doc, overrides);
  return parse_config_document(doc);
}

// ---------------------------------------------------------------------------
// Running

struct SubRunOutcome {
  std::string name;
  RunResult result;
  GofReport gof;
  Histogram final_histogram;
  double wall_seconds = 0.0;
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Creates dir and proves it writable before any run output is produced.
inline void ensure_writable(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const auto probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "ok")) throw IoError("output directory not writable: " + dir.string());
  }
  std::filesystem::remove(probe, ec);
}

inline SubRunOutcome execute(const SubRun& sub, const AnalysisSpec& analysis) {
  const auto start = std::chrono::steady_clock::now();
  SubRunOutcome out{sub.name, run(sub.sim), {}, {}, 0.0};
  const auto values = out.result.final_assets.values();
  const double mean = target_mean(sub.sim.init);
  out.gof = gof_report(values, mean, analysis.bins, analysis.moment_orders, analysis.binning);
  out.final_histogram = make_histogram(values, analysis.bins, std::nullopt, analysis.binning);
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

inline void write_subrun(const std::filesystem::path& dir, const SubRun& sub,
                         const SubRunOutcome& out) {
  std::filesystem::create_directories(dir);
  for (const auto& snap : out.result.snapshots) {
    std::ostringstream csv;
    if (snap.assets) {
      write_asset_csv(csv, snap.assets->values());
      write_text(dir / ("snapshot_" + std::to_string(snap.matches) + ".csv"), csv.str());
    } else {
      write_histogram_csv(csv, snap.histogram);
      write_text(dir / ("snapshot_" + std::to_string(snap.matches) + "_histogram.csv"), csv.str());
    }
  }
  std::ostringstream hist;
  write_histogram_csv(hist, out.final_histogram);
  write_text(dir / "histogram.csv", hist.str());
  write_text(dir / "gof.json", dump(to_json(out.gof)));

  json snaps = json::array();
  for (const auto& s : out.result.snapshots) {
    snaps.push_back({{"matches", s.matches}, {"min_asset", s.min_asset},
                     {"relative_drift", s.relative_drift}, {"full_copy", s.assets.has_value()}});
  }
  const json meta = {{"name", sub.name},
                     {"generator", std::string(Rng::kName)},
                     {"seed", sub.sim.seed},
                     {"config", to_json(sub.sim)},
                     {"conservation_drift", out.result.conservation_drift},
                     {"final_min_asset", out.result.final_assets.min()},
                     {"snapshots", snaps},
                     {"timestamp", {{"finished_utc", utc_now()}, {"wall_time_s", out.wall_seconds}}}};
  write_text(dir / "metadata.json", dump(meta));
}

}  // namespace detail

struct ExperimentReport {
  std::vector<SubRunOutcome> runs;
  /// (run a, run b, two-sample KS of final assets)
  std::vector<std::tuple<std::string, std::string, double>> pairwise_ks;
  bool thresholds_met = true;
};

/// Runs every sub-run (in parallel), then writes all outputs. Throws
/// IntegrityError or IoError; see run_experiment for the exit-code wrapper.
inline ExperimentReport execute_experiment(const ExperimentSpec& spec) {
  detail::ensure_writable(spec.output_dir);

  std::vector<std::future<SubRunOutcome>> pending;
  for (const auto& sub : spec.runs) {
    pending.push_back(std::async(std::launch::async, [&sub, &spec] {
      return detail::execute(sub, spec.analysis);
    }));
  }
  ExperimentReport report;
  for (auto& f : pending) report.runs.push_back(f.get());

  for (std::size_t a = 0; a < report.runs.size(); ++a) {
    for (std::size_t b = a + 1; b < report.runs.size(); ++b) {
      report.pairwise_ks.emplace_back(report.runs[a].name, report.runs[b].name,
                                      ks_two_sample(report.runs[a].result.final_assets.values(),
                                                    report.runs[b].result.final_assets.values()));
    }
  }

  const double threshold = spec.analysis.ks_threshold;
  json runs = json::array();
  std::ostringstream csv;
  csv << "run,rule,init,seed,conservation_drift,ks_exponential,l1";
  for (const int k : spec.analysis.moment_orders) csv << ",moment_ratio_" << k;
  csv << '\n';
  for (std::size_t r = 0; r < spec.runs.size(); ++r) {
    const auto& sub = spec.runs[r];
    const auto& out = report.runs[r];
    detail::write_subrun(spec.output_dir / sub.name, sub, out);
    const bool pass = out.gof.ks < threshold;
    report.thresholds_met = report.thresholds_met && pass;
    runs.push_back({{"name", sub.name},
                    {"seed", sub.sim.seed},
                    {"rule", to_json(sub.sim.rule)},
                    {"init", to_json(sub.sim.init)},
                    {"conservation_drift", out.result.conservation_drift},
                    {"gof", to_json(out.gof)},
                    {"ks_exponential_pass", pass}});
    csv << sub.name << ',' << rule_name(sub.sim.rule) << ',' << distribution_name(sub.sim.init)
        << ',' << sub.sim.seed << ',' << format_sci17(out.result.conservation_drift) << ','
        << format_sci17(out.gof.ks) << ',' << format_sci17(out.gof.l1);
    for (const auto& [k, ratio] : out.gof.moment_ratios) csv << ',' << format_sci17(ratio);
    csv << '\n';
  }
  json pairs = json::array();
  for (const auto& [a, b, d] : report.pairwise_ks) {
    const bool pass = d < threshold;
    report.thresholds_met = report.thresholds_met && pass;
    pairs.push_back({{"a", a}, {"b", b}, {"ks", d}, {"pass", pass}});
  }

  double wall = 0.0;
  for (const auto& out : report.runs) wall = std::max(wall, out.wall_seconds);
  const json summary = {
      {"preset", preset_name(spec.preset)},
      {"seed", spec.seed},
      {"seed_generated", spec.seed_generated},
      {"generator", std::string(Rng::kName)},
      {"n", spec.n},
      {"matches", spec.matches},
      {"matches_per_player", 2.0 * static_cast<double>(spec.matches) / static_cast<double>(spec.n)},
      {"thresholds",
       {{"ks_exponential", threshold},
        {"ks_pairwise", threshold},
        {"conservation_drift", kConservationTolerance}}},
      {"runs", runs},
      {"pairwise_ks", pairs},
      {"thresholds_met", report.thresholds_met},
      {"timestamp", {{"finished_utc", detail::utc_now()}, {"wall_time_s", wall}}}};
  detail::write_text(spec.output_dir / "summary.json", detail::dump(summary));
  detail::write_text(spec.output_dir / "summary.csv", csv.str());
  return report;
}

/// Exit status: 0 success, 3 integrity failure, 4 I/O failure. Threshold
/// misses are reported in summary.json but do not change the status.
inline int run_experiment(const ExperimentSpec& spec, std::ostream& log) {
  try {
    const ExperimentReport report = execute_experiment(spec);
    for (const auto& out : report.runs) {
      log << out.name << ": ks=" << out.gof.ks << " l1=" << out.gof.l1
          << " drift=" << out.result.conservation_drift << '\n';
    }
    for (const auto& [a, b, d] : report.pairwise_ks) {
      log << a << " vs " << b << ": two-sample ks=" << d << '\n';
    }
    return exit_code::ok;
  } catch (const IntegrityError& e) {
    log << "integrity error: " << e.what() << '\n';
    return exit_code::integrity;
  } catch (const IoError& e) {
    log << "i/o error: " << e.what() << '\n';
    return exit_code::io;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "i/o error: " << e.what() << '\n';
    return exit_code::io;
  }
}

}  // namespace zsg
