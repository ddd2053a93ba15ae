#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "softvoronoi/error.hpp"
#include "softvoronoi/report.hpp"

using namespace softvoronoi;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::string parse_error(const json& j) {
  try {
    parse_sweep_config(j);
  } catch (const InvalidInput& e) {
    return e.what();
  }
  return {};
}

ConvergenceCurve tiny_curve() {
  ConvergenceCurve curve;
  curve.protocol = Protocol::resampled;
  curve.dataset = "moons";
  curve.mode = AssignMode::entmax15;
  for (double sigma : {0.001, 0.1}) {
    CurveRecord rec;
    rec.sigma = sigma;
    rec.discrepancies = {sigma, 2 * sigma};
    rec.max_devs = {sigma / 3, sigma};
    rec.mean_r = 1.5 * sigma;
    rec.std_r = 0.1;
    rec.max_centroid_dev = 2 * sigma / 3;
    curve.records.push_back(rec);
  }
  return curve;
}

}  // namespace

TEST_CASE("sweep config defaults") {
  const SweepConfig cfg = parse_sweep_config(json::object());
  CHECK(cfg.datasets.size() == 4);
  CHECK(cfg.k == 3);
  CHECK(cfg.iterations == 150);
  CHECK(cfg.runs == 200);
  CHECK(cfg.schedule().size() == 50);
  CHECK(cfg.schedule().sigma_min() == 1e-3);
  CHECK(cfg.schedule().sigma_max() == 1e-1);
  CHECK(cfg.modes.size() == 2);
  CHECK(cfg.protocols.size() == 2);
  CHECK(cfg.effective_dataset_seed() == cfg.master_seed);
}

TEST_CASE("sweep config round trips through json") {
  const json in = json::parse(R"({
    "dataset": ["circles", "blobs"], "n": 120, "dataset_seed": 8,
    "params": {"noise": 0.02, "factor": 0.4}, "k": 4, "T": 30, "M": 7,
    "sigmas": [0.001, 0.0123456789012345, 0.5], "mode": "entmax15",
    "protocol": "resampled", "master_seed": 18446744073709551615
  })");
  const SweepConfig cfg = parse_sweep_config(in);
  CHECK(cfg.datasets == std::vector<DatasetKind>{DatasetKind::circles, DatasetKind::blobs});
  CHECK(cfg.params.factor == 0.4);
  CHECK(cfg.master_seed == 18446744073709551615ull);
  CHECK(cfg.schedule().values == std::vector<double>{0.001, 0.0123456789012345, 0.5});
  const json out = to_json(cfg);
  CHECK(to_json(parse_sweep_config(out)) == out);
  const ExperimentConfig exp = cfg.experiment(DatasetKind::blobs, AssignMode::entmax15, Protocol::resampled);
  CHECK(exp.dataset.seed == 8);
  CHECK(exp.dataset.n == 120);
  CHECK(exp.k == 4);
  CHECK(exp.runs == 7);
  CHECK(exp.iterations == 30);
}

TEST_CASE("invalid config fields are named") {
  CHECK(parse_error(json{{"bogus", 1}}).find("'bogus'") != std::string::npos);
  CHECK(parse_error(json{{"k", "three"}}).find("'k'") != std::string::npos);
  CHECK(parse_error(json{{"k", 1}}).find("'k'") != std::string::npos);
  CHECK(parse_error(json{{"M", 0}}).find("'M'") != std::string::npos);
  CHECK(parse_error(json{{"dataset", "swissroll"}}).find("'dataset'") != std::string::npos);
  CHECK(parse_error(json{{"mode", "hard"}}).find("'mode'") != std::string::npos);
  CHECK(parse_error(json{{"protocol", "sometimes"}}).find("'protocol'") != std::string::npos);
  CHECK(parse_error(json{{"sigma_min", 1.0}}).find("'sigma_min'") != std::string::npos);
  CHECK(parse_error(json{{"params", {{"wobble", 1}}}}).find("'params.wobble'") != std::string::npos);
  CHECK(parse_error(json{{"params", {{"factor", 2.0}}}}).find("'params'") != std::string::npos);
  CHECK(parse_error(json::array()).find("config") != std::string::npos);
}

TEST_CASE("config files") {
  const fs::path dir = fs::temp_directory_path() / "softvoronoi_report_test";
  fs::create_directories(dir);
  std::ofstream(dir / "ok.json") << R"({"M": 3, "L": 4})";
  std::ofstream(dir / "broken.json") << "{\"M\": 3,";
  CHECK(load_sweep_config(dir / "ok.json").runs == 3);
  CHECK_THROWS_AS(load_sweep_config(dir / "broken.json"), InvalidInput);
  CHECK_THROWS_AS(load_sweep_config(dir / "absent.json"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("curve and run tables") {
  const fs::path dir = fs::temp_directory_path() / "softvoronoi_report_csv";
  fs::create_directories(dir);
  const ConvergenceCurve curve = tiny_curve();
  write_curve_csv({curve}, dir / "curve.csv");
  write_runs_csv({curve}, dir / "runs.csv");

  const std::string table = read_file(dir / "curve.csv");
  CHECK(first_line(table) == "protocol,dataset,mode,sigma,mean_R,std_R,max_centroid_dev,n_runs");
  CHECK(table.find("resampled,moons,entmax15,0.001,0.0015,0.1,") != std::string::npos);
  CHECK(table.back() == '\n');

  const std::string runs = read_file(dir / "runs.csv");
  CHECK(first_line(runs) == "protocol,dataset,mode,sigma_index,sigma,trial,discrepancy,max_dev");
  CHECK(std::count(runs.begin(), runs.end(), '\n') == 5);
  CHECK(runs.find("resampled,moons,entmax15,1,0.1,1,0.2,0.1\n") != std::string::npos);

  CHECK_THROWS_AS(write_curve_csv({curve}, dir / "missing" / "curve.csv"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("json records") {
  RateFit fit;
  fit.m = 1.25;
  fit.points_used = 25;
  fit.fit_range = "lower_half";
  const json j = to_json(fit);
  for (const char* key : {"m", "b", "r2", "points_used", "fit_range"}) CHECK(j.contains(key));
  CHECK(j["fit_range"] == "lower_half");
  const json manifest = manifest_base();
  CHECK(manifest.contains("version"));
  CHECK(manifest.dump().find("xoshiro256**") != std::string::npos);
}
