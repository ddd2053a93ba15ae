// softvoronoi: generate benchmark datasets, run K-Means / SoftRBF on a CSV,
// and sweep the soft-to-hard convergence protocols.
//
//   softvoronoi generate --kind circles --n 300 --seed 7 --out c.csv
//   softvoronoi cluster --data c.csv --algo softrbf --k 3 --sigma 1e-3 --mode entmax15 --out run/
//   softvoronoi sweep --config configs/desk.json --out sweep/ --workers 8
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "softvoronoi/assign.hpp"
#include "softvoronoi/cluster.hpp"
#include "softvoronoi/error.hpp"
#include "softvoronoi/evalharness.hpp"
#include "softvoronoi/numfmt.hpp"
#include "softvoronoi/report.hpp"
#include "softvoronoi/synthdata.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace softvoronoi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flag, then SOFTVORONOI_SEED, then the fallback.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SOFTVORONOI_SEED")) {
    try {
      std::size_t used = 0;
      const auto value = std::stoull(env, &used);
      if (used == std::string(env).size()) return value;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("SOFTVORONOI_SEED is not an unsigned integer: '") + env + "'");
  }
  return fallback;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw DataError("cannot create output directory '" + dir.string() + "'");
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct GenerateArgs {
  std::string kind;
  std::size_t n = 300;
  std::optional<std::uint64_t> seed;
  fs::path out;
  GenParams params;
};

int cmd_generate(const GenerateArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  GenSpec spec{parse_dataset_kind(args.kind), args.n, resolve_seed(args.seed, 0), args.params};
  const Dataset data = generate(spec);
  save_csv(data, args.out);

  json manifest = manifest_base();
  manifest["command"] = "generate";
  manifest["config"] = {{"kind", args.kind},
                        {"n", spec.n},
                        {"seed", spec.seed},
                        {"params", to_json(spec.params)}};
  manifest["outputs"] = {args.out.filename().string()};
  manifest["radius"] = data.radius();
  manifest["wall_seconds"] = seconds_since(start);
  write_json(manifest, fs::path(args.out.string() + ".manifest.json"));
  return kExitOk;
}

struct ClusterArgs {
  fs::path data;
  std::string algo;
  std::size_t k = 3;
  std::optional<double> sigma;
  std::optional<std::string> mode;
  std::size_t iterations = 150;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  fs::path out;
};

int cmd_cluster(const ClusterArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  if (args.algo == "softrbf" && (!args.sigma || !args.mode)) {
    throw UsageError("--algo softrbf requires --sigma and --mode");
  }
  const Dataset data = load_csv(args.data);
  if (data.n() < args.k) {
    throw InvalidInput("n = " + std::to_string(data.n()) + " is smaller than k = " +
                       std::to_string(args.k));
  }
  const std::uint64_t seed = resolve_seed(args.seed, 0);
  const Centroids init = draw_init(data, args.k, seed);
  ensure_dir(args.out);

  std::vector<std::string> header;
  for (std::size_t c = 0; c < data.d(); ++c) header.push_back("x" + std::to_string(c));

  json manifest = manifest_base();
  manifest["command"] = "cluster";
  json config{{"data", args.data.string()},
              {"algo", args.algo},
              {"k", args.k},
              {"T", args.iterations},
              {"init_seed", seed}};
  std::vector<std::string> outputs{"centroids.csv", "history.csv"};

  if (args.algo == "kmeans") {
    const double tol = args.tol.value_or(1e-9 * data.radius());
    config["tol"] = tol;
    const KMeansResult km = kmeans(data, init, args.iterations, tol);
    write_matrix_csv(km.centroids.centers(), header, args.out / "centroids.csv");
    Matrix labels(data.n(), 1);
    for (std::size_t i = 0; i < data.n(); ++i) labels(i, 0) = static_cast<double>(km.labels.labels[i]);
    write_matrix_csv(labels, {"label"}, args.out / "labels.csv");
    Matrix history(km.distortion_history.size(), 2);
    for (std::size_t t = 0; t < km.distortion_history.size(); ++t) {
      history(t, 0) = static_cast<double>(t + 1);
      history(t, 1) = km.distortion_history[t];
    }
    write_matrix_csv(history, {"iteration", "distortion"}, args.out / "history.csv");
    outputs.push_back("labels.csv");
    manifest["result"] = {{"iterations_run", km.iterations_run}, {"converged", km.converged}};
    manifest["diagnostics"] = {{"zero_mass_events", 0}, {"renormalized_rows", 0}};
  } else {
    const AssignMode mode = parse_assign_mode(*args.mode);
    if (mode == AssignMode::hard) throw UsageError("--mode must be softmax or entmax15");
    config["sigma"] = *args.sigma;
    config["mode"] = std::string(to_string(mode));
    const SoftRBFResult fit =
        softrbf_fit(data, init, Temperature(*args.sigma), args.iterations, mode);
    write_matrix_csv(fit.centroids.centers(), header, args.out / "centroids.csv");
    std::vector<std::string> rheader;
    for (std::size_t j = 0; j < args.k; ++j) rheader.push_back("r" + std::to_string(j));
    write_matrix_csv(fit.responsibilities.r, rheader, args.out / "responsibilities.csv");
    Matrix history(fit.loss_history.size(), 2);
    for (std::size_t t = 0; t < fit.loss_history.size(); ++t) {
      history(t, 0) = static_cast<double>(t + 1);
      history(t, 1) = fit.loss_history[t];
    }
    write_matrix_csv(history, {"iteration", "soft_distortion"}, args.out / "history.csv");
    outputs.push_back("responsibilities.csv");
    manifest["result"] = {{"iterations_run", fit.iterations_run}};
    manifest["diagnostics"] = {{"zero_mass_events", fit.zero_mass_events},
                               {"renormalized_rows", fit.renormalized_rows}};
  }
  manifest["config"] = config;
  manifest["outputs"] = outputs;
  manifest["wall_seconds"] = seconds_since(start);
  write_json(manifest, args.out / "manifest.json");
  return kExitOk;
}

struct SweepArgs {
  std::optional<fs::path> config;
  fs::path out;
  std::size_t workers = 1;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> n;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> levels;
  std::optional<std::uint64_t> master_seed;
  std::vector<std::string> datasets;
  std::vector<std::string> modes;
  std::vector<std::string> protocols;
};

SweepConfig resolve_sweep_config(const SweepArgs& args) {
  json j = json::object();
  if (args.config) {
    std::ifstream in(*args.config);
    if (!in) throw UsageError("cannot open config '" + args.config->string() + "'");
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      throw UsageError("config '" + args.config->string() + "': " + e.what());
    }
    if (!j.is_object()) throw UsageError("config: top level must be an object");
  }
  if (args.runs) j["M"] = *args.runs;
  if (args.n) j["n"] = *args.n;
  if (args.iterations) j["T"] = *args.iterations;
  if (args.levels) j["L"] = *args.levels;
  if (!args.datasets.empty()) j["dataset"] = args.datasets;
  if (!args.modes.empty()) j["mode"] = args.modes;
  if (!args.protocols.empty()) j["protocol"] = args.protocols;
  const bool seed_in_file = j.contains("master_seed");
  if (args.master_seed || !seed_in_file) {
    j["master_seed"] = resolve_seed(args.master_seed, 0);
  }
  return parse_sweep_config(j);
}

json bound_summary(const Dataset& data, const SweepConfig& cfg, AssignMode mode) {
  const SigmaSchedule schedule = cfg.schedule();
  json runs = json::array();
  std::size_t applicable = 0;
  std::size_t violations = 0;
  for (std::size_t i = 0; i < cfg.runs; ++i) {
    const Centroids init = draw_init(data, cfg.k, fixed_init_seed(cfg.master_seed, i));
    const KMeansResult km = kmeans(data, init, cfg.iterations);
    const BoundSweep sweep = verify_bounds(data, km.centroids, schedule, mode);
    applicable += sweep.applicable;
    violations += sweep.violations;
    json run{{"trial", i},
             {"separation", to_json(sweep.stats)},
             {"applicable", sweep.applicable},
             {"violations", sweep.violations}};
    if (i == 0) {
      json reports = json::array();
      for (const auto& r : sweep.reports) reports.push_back(to_json(r));
      run["reports"] = reports;
    }
    runs.push_back(run);
  }
  return json{{"applicable_checks", applicable}, {"violations", violations}, {"runs", runs}};
}

int cmd_sweep(const SweepArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  SweepConfig cfg;
  try {
    cfg = resolve_sweep_config(args);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  ensure_dir(args.out);

  Diagnostics total;
  json fits = json::array();
  json bounds = json::array();
  std::vector<std::string> outputs;
  for (DatasetKind kind : cfg.datasets) {
    const Dataset data = generate(cfg.gen_spec(kind));
    const std::string name(to_string(kind));
    for (AssignMode mode : cfg.modes) {
      std::vector<ConvergenceCurve> curves;
      for (Protocol protocol : cfg.protocols) {
        const ExperimentConfig exp = cfg.experiment(kind, mode, protocol);
        curves.push_back(protocol == Protocol::fixed ? run_fixed_init(exp, data, args.workers)
                                                     : run_resampled(exp, data, args.workers));
        const ConvergenceCurve& curve = curves.back();
        total += curve.diagnostics;

        const auto sigmas = curve.sigmas();
        const auto means = curve.means();
        json entry{{"protocol", std::string(to_string(protocol))},
                   {"dataset", name},
                   {"mode", std::string(to_string(mode))},
                   {"spearman", spearman(sigmas, means)}};
        const double spread = ratio_spread_lower_half(sigmas, means);
        entry["ratio_spread_lower_half"] = std::isfinite(spread) ? json(spread) : json(nullptr);
        json entry_fits = json::array();
        for (int range = 0; range < 2; ++range) {
          try {
            entry_fits.push_back(to_json(range == 0 ? loglog_fit(curve) : loglog_fit_lower_half(curve)));
          } catch (const InvalidInput& e) {
            entry_fits.push_back({{"fit_range", range == 0 ? "full" : "lower_half"},
                                  {"error", e.what()}});
          }
        }
        entry["fits"] = entry_fits;
        fits.push_back(entry);
      }
      const std::string stem = name + "_" + std::string(to_string(mode));
      write_curve_csv(curves, args.out / ("curve_" + stem + ".csv"));
      write_runs_csv(curves, args.out / ("runs_" + stem + ".csv"));
      outputs.push_back("curve_" + stem + ".csv");
      outputs.push_back("runs_" + stem + ".csv");

      json b = bound_summary(data, cfg, mode);
      b["dataset"] = name;
      b["mode"] = std::string(to_string(mode));
      bounds.push_back(b);
    }
  }
  write_json(fits, args.out / "ratefit.json");
  write_json(bounds, args.out / "bounds.json");
  outputs.push_back("ratefit.json");
  outputs.push_back("bounds.json");

  json manifest = manifest_base();
  manifest["command"] = "sweep";
  manifest["config"] = to_json(cfg);
  manifest["workers"] = args.workers;
  manifest["outputs"] = outputs;
  manifest["diagnostics"] = to_json(total);
  manifest["wall_seconds"] = seconds_since(start);
  write_json(manifest, args.out / "manifest.json");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft-to-hard clustering experiments: K-Means, SoftRBF and convergence sweeps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SOFTVORONOI_VERSION);

  GenerateArgs gen;
  auto* generate_cmd = app.add_subcommand("generate", "Write a synthetic benchmark dataset as CSV");
  generate_cmd->add_option("--kind", gen.kind, "blobs | moons | spiral | circles")
      ->required()
      ->check(CLI::IsMember({"blobs", "moons", "spiral", "circles"}));
  generate_cmd->add_option("--n", gen.n, "Number of points")->check(CLI::PositiveNumber);
  generate_cmd->add_option("--seed", gen.seed, "Generator seed (default: $SOFTVORONOI_SEED or 0)");
  generate_cmd->add_option("--out", gen.out, "Output CSV path")->required();
  generate_cmd->add_option("--noise", gen.params.noise, "Noise (moons, spiral, circles)");
  generate_cmd->add_option("--spread", gen.params.spread, "Blob standard deviation");
  generate_cmd->add_option("--factor", gen.params.factor, "Inner circle scale");

  ClusterArgs cl;
  auto* cluster_cmd = app.add_subcommand("cluster", "Run K-Means or SoftRBF on a CSV dataset");
  cluster_cmd->add_option("--data", cl.data, "Input CSV")->required();
  cluster_cmd->add_option("--algo", cl.algo, "kmeans | softrbf")
      ->required()
      ->check(CLI::IsMember({"kmeans", "softrbf"}));
  cluster_cmd->add_option("--k", cl.k, "Number of clusters")->check(CLI::PositiveNumber);
  cluster_cmd->add_option("--sigma", cl.sigma, "Temperature (softrbf)");
  cluster_cmd->add_option("--mode", cl.mode, "softmax | entmax15 (softrbf)")
      ->check(CLI::IsMember({"softmax", "entmax15", "entmax"}));
  cluster_cmd->add_option("--T", cl.iterations, "Iterations")->check(CLI::PositiveNumber);
  cluster_cmd->add_option("--tol", cl.tol, "K-Means tolerance (default 1e-9 * radius)");
  cluster_cmd->add_option("--seed,--init-seed", cl.seed, "Initialisation seed");
  cluster_cmd->add_option("--out", cl.out, "Output directory")->required();

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run the sigma sweep under both protocols");
  sweep_cmd->add_option("--config", sw.config, "JSON config (fields as in ExperimentConfig)");
  sweep_cmd->add_option("--out", sw.out, "Output directory")->required();
  sweep_cmd->add_option("--workers", sw.workers, "Worker threads (0 = all cores)");
  sweep_cmd->add_option("--M", sw.runs, "Override runs per sigma");
  sweep_cmd->add_option("--n", sw.n, "Override points per dataset");
  sweep_cmd->add_option("--T", sw.iterations, "Override iterations");
  sweep_cmd->add_option("--L", sw.levels, "Override schedule length");
  sweep_cmd->add_option("--master-seed", sw.master_seed, "Override master seed");
  sweep_cmd->add_option("--dataset", sw.datasets, "Override dataset list");
  sweep_cmd->add_option("--mode", sw.modes, "Override mode list");
  sweep_cmd->add_option("--protocol", sw.protocols, "Override protocol list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*generate_cmd) return cmd_generate(gen);
    if (*cluster_cmd) return cmd_cluster(cl);
    if (*sweep_cmd) return cmd_sweep(sw);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
