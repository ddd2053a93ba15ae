#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "softvoronoi/evalharness.hpp"

namespace softvoronoi {

// Declarative sweep description. Field names follow ExperimentConfig; the
// dataset, mode and protocol fields accept a single name or a list, and the
// sweep runs their cross product.
struct SweepConfig {
  std::vector<DatasetKind> datasets{DatasetKind::blobs, DatasetKind::moons, DatasetKind::spiral,
                                    DatasetKind::circles};
  std::size_t n = 300;
  std::optional<std::uint64_t> dataset_seed;
  GenParams params;
  std::size_t k = 3;
  std::size_t iterations = 150;
  std::size_t runs = 200;
  double sigma_min = 1e-3;
  double sigma_max = 1e-1;
  std::size_t levels = 50;
  std::optional<std::vector<double>> sigmas;
  std::vector<AssignMode> modes{AssignMode::softmax, AssignMode::entmax15};
  std::vector<Protocol> protocols{Protocol::fixed, Protocol::resampled};
  std::uint64_t master_seed = 0;

  SigmaSchedule schedule() const;
  // dataset_seed if set, else master_seed.
  std::uint64_t effective_dataset_seed() const;
  GenSpec gen_spec(DatasetKind kind) const;
  ExperimentConfig experiment(DatasetKind kind, AssignMode mode, Protocol protocol) const;
  void validate() const;
};

// Throws InvalidInput naming the offending field. Unknown fields are rejected.
SweepConfig parse_sweep_config(const nlohmann::json& j);
SweepConfig load_sweep_config(const std::filesystem::path& path);
nlohmann::json to_json(const SweepConfig& cfg);
nlohmann::json to_json(const GenParams& params);
nlohmann::json to_json(const Diagnostics& diag);
nlohmann::json to_json(const RateFit& fit);
nlohmann::json to_json(const BoundReport& report);
nlohmann::json to_json(const SeparationStats& stats);

// protocol,dataset,mode,sigma,mean_R,std_R,max_centroid_dev,n_runs
void write_curve_csv(const std::vector<ConvergenceCurve>& curves, const std::filesystem::path& path);
// protocol,dataset,mode,sigma_index,sigma,trial,discrepancy,max_dev
void write_runs_csv(const std::vector<ConvergenceCurve>& curves, const std::filesystem::path& path);

void write_matrix_csv(const Matrix& m, const std::vector<std::string>& header,
                      const std::filesystem::path& path);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

// Fixed fields of every run manifest: library version and RNG identifiers.
nlohmann::json manifest_base();

}  // namespace softvoronoi
