#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>

#include "softvoronoi/geometry.hpp"

namespace softvoronoi {

enum class DatasetKind { blobs, moons, spiral, circles };

std::string_view to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(std::string_view name);

// Generator parameters. Each kind reads only its own fields; the defaults
// reproduce the benchmark suite (3 blobs; moons noise 0.05; spiral radius 3;
// circles factor 0.5, noise 0.05).
struct GenParams {
  // blobs: centres evenly spaced on a circle of radius blob_ring.
  std::size_t centers = 3;
  double blob_ring = 4.0;
  double spread = 0.5;
  // moons, spiral and circles: isotropic Gaussian noise.
  double noise = 0.05;
  // spiral: arm count, outer radius and revolutions over the arm.
  std::size_t arms = 3;
  double spiral_radius = 3.0;
  double turns = 1.0;
  // circles: inner ring radius relative to the unit outer ring.
  double factor = 0.5;
};

struct GenSpec {
  DatasetKind kind = DatasetKind::blobs;
  std::size_t n = 300;
  std::uint64_t seed = 0;
  GenParams params;
};

// Deterministic in (kind, n, seed, params). Always 2-D, with ground-truth labels.
Dataset generate(const GenSpec& spec);

// One point per row; a first row with no numeric fields is a header. A header
// column named "label" is read as integer labels.
Dataset load_csv(const std::filesystem::path& path);

// Writes "x0,...,x{d-1}[,label]" then one row per point. Values use the
// shortest decimal form that reads back to the same double.
void save_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace softvoronoi
