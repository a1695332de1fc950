#pragma once

// Command-line front end. Precedence for every scenario field:
// built-in defaults < --config file < individual flags.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "sdwca/config.hpp"
#include "sdwca/engine.hpp"
#include "sdwca/reporting.hpp"

namespace sdwca {

inline constexpr const char* kOutDirEnv = "SDWCA_OUT_DIR";

enum class SweepAxis { N, Range, Vmax };

inline SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "n") return SweepAxis::N;
  if (s == "range") return SweepAxis::Range;
  if (s == "vmax") return SweepAxis::Vmax;
  throw std::invalid_argument("axis: expected n, range or vmax");
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::Range;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  ScenarioConfig base;
};

inline void apply_axis(ScenarioConfig& c, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::N:
      if (value < 1.0 || value != std::floor(value)) throw std::invalid_argument("values: n must be a positive integer");
      c.n = static_cast<std::size_t>(value);
      c.positions.clear();
      break;
    case SweepAxis::Range: c.range = value; break;
    case SweepAxis::Vmax: c.vmax = value; break;
  }
}

inline double axis_value(const MetricsReport& r, SweepAxis axis) {
  switch (axis) {
    case SweepAxis::N: return static_cast<double>(r.n);
    case SweepAxis::Range: return r.range;
    case SweepAxis::Vmax: return r.vmax;
  }
  return 0.0;
}

/// "1..10" or "1,2,5".
inline std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  if (const auto dots = s.find(".."); dots != std::string::npos) {
    const auto lo = std::stoull(s.substr(0, dots));
    const auto hi = std::stoull(s.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("seeds: empty range " + s);
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(std::stoull(item));
  }
  if (out.empty()) throw std::invalid_argument("seeds: no seeds given");
  return out;
}

inline std::vector<double> parse_values(const std::string& s) {
  std::vector<double> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(parse_double(item));
  }
  if (out.empty()) throw std::invalid_argument("values: no values given");
  return out;
}

inline Terrain parse_terrain(const std::string& s) {
  const auto x = s.find_first_of("xX");
  if (x == std::string::npos) throw std::invalid_argument("terrain: expected WIDTHxHEIGHT");
  return Terrain{parse_double(s.substr(0, x)), parse_double(s.substr(x + 1))};
}

/// Runs every (value, seed) pair on up to `jobs` threads and returns the
/// reports sorted by (axis value, seed).
inline std::vector<MetricsReport> run_sweep(const SweepSpec& spec, unsigned jobs = 0) {
  if (spec.values.empty()) throw std::invalid_argument("sweep: values must be nonempty");
  if (spec.seeds.empty()) throw std::invalid_argument("sweep: seeds must be nonempty");
  std::vector<ScenarioConfig> runs;
  for (double v : spec.values) {
    for (auto seed : spec.seeds) {
      ScenarioConfig c = spec.base;
      apply_axis(c, spec.axis, v);
      c.seed = seed;
      validate(c);
      runs.push_back(std::move(c));
    }
  }
  std::vector<MetricsReport> reports(runs.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      try {
        reports[i] = run_scenario(runs[i]).report();
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, runs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  std::stable_sort(reports.begin(), reports.end(), [&](const MetricsReport& a, const MetricsReport& b) {
    return std::make_tuple(axis_value(a, spec.axis), a.seed) < std::make_tuple(axis_value(b, spec.axis), b.seed);
  });
  return reports;
}

/// Merges fresh rows into an existing summary: a rerun of the same scenario
/// replaces its old row, new scenarios extend the file.
inline std::vector<MetricsReport> merge_summaries(std::vector<MetricsReport> existing,
                                                  const std::vector<MetricsReport>& fresh, SweepAxis axis) {
  auto key = [](const MetricsReport& r) { return std::make_tuple(r.n, r.range, r.vmax, r.seed); };
  for (const auto& f : fresh) {
    auto it = std::find_if(existing.begin(), existing.end(), [&](const MetricsReport& e) { return key(e) == key(f); });
    if (it != existing.end()) {
      *it = f;
    } else {
      existing.push_back(f);
    }
  }
  std::stable_sort(existing.begin(), existing.end(), [&](const MetricsReport& a, const MetricsReport& b) {
    return std::make_tuple(axis_value(a, axis), a.seed, a.n, a.range, a.vmax) <
           std::make_tuple(axis_value(b, axis), b.seed, b.n, b.range, b.vmax);
  });
  return existing;
}

inline std::filesystem::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return ".";
}

inline void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

/// Writes trace.csv, series.csv and summary.csv for one finished world.
inline void write_run_outputs(const World& w, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "trace.csv", w.trace().str());
  std::ostringstream series;
  write_series_csv(series, w.series());
  write_file(dir / "series.csv", series.str());
  std::ostringstream summary;
  write_summary_csv(summary, {w.report()});
  write_file(dir / "summary.csv", summary.str());
}

namespace detail {

// Scenario flags shared by every subcommand; each is applied only if given.
struct ScenarioFlags {
  std::string config;
  std::size_t n = 0;
  std::string terrain;
  double vmax = 0, range = 0, pt = 0, ie = 0, t = 0, bi = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<CLI::Option*, std::function<void(ScenarioConfig&)>>> setters;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON scenario file")->check(CLI::ExistingFile);
    add(app->add_option("--n", n, "number of nodes"), [this](ScenarioConfig& c) {
      c.n = n;
      c.positions.clear();
    });
    add(app->add_option("--terrain", terrain, "terrain WIDTHxHEIGHT in m"),
        [this](ScenarioConfig& c) { c.terrain = parse_terrain(terrain); });
    add(app->add_option("--vmax", vmax, "maximum speed in m/s"), [this](ScenarioConfig& c) { c.vmax = vmax; });
    add(app->add_option("--range", range, "transmission range in m"), [this](ScenarioConfig& c) { c.range = range; });
    add(app->add_option("--pt", pt, "pause time in s"), [this](ScenarioConfig& c) { c.pause = pt; });
    add(app->add_option("--ie", ie, "initial energy in J"), [this](ScenarioConfig& c) { c.initial_energy = ie; });
    add(app->add_option("--t", t, "simulated time in s"), [this](ScenarioConfig& c) { c.sim_time = t; });
    add(app->add_option("--bi", bi, "hello broadcast interval in s"), [this](ScenarioConfig& c) { c.bi = bi; });
    add(app->add_option("--seed", seed, "random seed"), [this](ScenarioConfig& c) { c.seed = seed; });
  }

  void add(CLI::Option* opt, std::function<void(ScenarioConfig&)> fn) { setters.emplace_back(opt, std::move(fn)); }

  ScenarioConfig build(ScenarioConfig base = {}) const {
    ScenarioConfig c = config.empty() ? std::move(base) : load_config(config);
    for (const auto& [opt, fn] : setters) {
      if (opt->count() > 0) fn(c);
    }
    validate(c);
    return c;
  }
};

}  // namespace detail

/// Entry point shared by the sdwca tool and the CLI tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Weighted clustering simulator for mobile ad hoc networks"};
  app.require_subcommand(1);

  detail::ScenarioFlags run_flags;
  std::string run_out;
  auto* run = app.add_subcommand("run", "run one scenario and write trace.csv, series.csv, summary.csv");
  run_flags.attach(run);
  run->add_option("--out", run_out, std::string("output directory (default $") + kOutDirEnv + " or .)");

  detail::ScenarioFlags sweep_flags;
  std::string sweep_out, axis = "range", values, seeds = "1..10";
  unsigned jobs = 0;
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep and write summary.csv");
  sweep_flags.attach(sweep);
  sweep->add_option("--axis", axis, "swept parameter")->check(CLI::IsMember({"n", "range", "vmax"}));
  sweep->add_option("--values", values, "comma-separated axis values")->required();
  sweep->add_option("--seeds", seeds, "seed list: A..B or a,b,c");
  sweep->add_option("--jobs", jobs, "worker threads (0 = hardware concurrency)");
  sweep->add_option("--out", sweep_out, std::string("output directory (default $") + kOutDirEnv + " or .)");

  detail::ScenarioFlags audit_flags;
  auto* audit = app.add_subcommand("audit", "run a static scenario and check every message count");
  audit_flags.attach(audit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (run->parsed()) {
      const auto cfg = run_flags.build();
      const World w = run_scenario(cfg);
      const auto dir = output_dir(run_out);
      write_run_outputs(w, dir);
      const auto rep = w.report();
      out << "clusters=" << format_double(rep.avg_clusters) << " reaffiliations=" << rep.reaffiliations
          << " rate=" << format_double(rep.reaffiliation_rate) << " hello=" << rep.hello
          << " formation=" << rep.formation << " maintenance=" << rep.maintenance << " outcome=" << to_string(rep.outcome)
          << " violations=" << rep.invariant_violations << " out=" << dir.string() << '\n';
      return 0;
    }
    if (sweep->parsed()) {
      SweepSpec spec;
      spec.base = sweep_flags.build();
      spec.axis = sweep_axis_from_string(axis);
      spec.values = parse_values(values);
      spec.seeds = parse_seeds(seeds);
      const auto fresh = run_sweep(spec, jobs);
      const auto dir = output_dir(sweep_out);
      std::filesystem::create_directories(dir);
      const auto path = dir / "summary.csv";
      std::vector<MetricsReport> existing;
      if (std::filesystem::exists(path)) {
        std::ifstream in(path);
        existing = read_summary_csv(in);
      }
      const auto merged = merge_summaries(std::move(existing), fresh, spec.axis);
      std::ostringstream body;
      write_summary_csv(body, merged);
      write_file(path, body.str());
      out << "runs=" << fresh.size() << " rows=" << merged.size() << " out=" << path.string() << '\n';
      return 0;
    }
    if (audit->parsed()) {
      ScenarioConfig base;
      base.vmax = 0.0;
      auto cfg = audit_flags.build(base);
      if (cfg.vmax != 0.0) {
        err << "audit: counts are exact only for static scenarios (vmax = 0)\n";
        return 2;
      }
      const World w = run_scenario(cfg);
      const auto rep = w.audit();
      rep.write(out);
      const bool structural = w.violation_count() == 0;
      if (!structural) out << "FAIL structural invariants: " << w.violation_count() << " violations\n";
      return rep.passed() && structural ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace sdwca
