#include "softvoronoi/synthdata.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "softvoronoi/error.hpp"
#include "softvoronoi/numfmt.hpp"
#include "softvoronoi/rng.hpp"

namespace softvoronoi {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void validate(const GenSpec& spec) {
  const GenParams& p = spec.params;
  if (spec.n < 1) throw InvalidInput("generate: n must be >= 1");
  if (!(p.noise >= 0.0) || !(p.spread >= 0.0)) {
    throw InvalidInput("generate: noise and spread must be >= 0");
  }
  if (!(p.factor > 0.0 && p.factor < 1.0)) {
    throw InvalidInput("generate: circles factor must lie in (0, 1)");
  }
  if (p.centers < 1 || p.arms < 1) throw InvalidInput("generate: need at least one centre/arm");
  if (!(p.spiral_radius > 0.0) || !(p.turns > 0.0) || !(p.blob_ring >= 0.0)) {
    throw InvalidInput("generate: spiral radius, turns and blob ring must be positive");
  }
}

// Sizes of `groups` consecutive blocks covering n points; the first n % groups
// blocks get one extra point.
std::vector<std::size_t> block_sizes(std::size_t n, std::size_t groups) {
  std::vector<std::size_t> sizes(groups, n / groups);
  for (std::size_t g = 0; g < n % groups; ++g) ++sizes[g];
  return sizes;
}

// Evenly spaced parameter in [0, 1]; a single point sits at 0.
double grid(std::size_t idx, std::size_t count, bool closed) {
  if (count <= 1) return 0.0;
  return static_cast<double>(idx) / static_cast<double>(closed ? count - 1 : count);
}

class Builder {
 public:
  Builder(std::size_t n, std::uint64_t seed) : points_(n, 2), labels_(n), rng_(seed) {}

  void add(double px, double py, int label, double noise) {
    // Both normals are drawn even at zero noise so streams stay aligned.
    const double ex = rng_.normal();
    const double ey = rng_.normal();
    points_(next_, 0) = px + noise * ex;
    points_(next_, 1) = py + noise * ey;
    labels_[next_] = label;
    ++next_;
  }

  Dataset finish() { return Dataset(std::move(points_), std::move(labels_)); }

 private:
  Matrix points_;
  std::vector<int> labels_;
  Rng rng_;
  std::size_t next_ = 0;
};

Dataset make_blobs(const GenSpec& spec) {
  const GenParams& p = spec.params;
  Builder b(spec.n, spec.seed);
  const auto sizes = block_sizes(spec.n, p.centers);
  for (std::size_t c = 0; c < p.centers; ++c) {
    const double angle = kTwoPi * static_cast<double>(c) / static_cast<double>(p.centers);
    const double cx = p.blob_ring * std::cos(angle);
    const double cy = p.blob_ring * std::sin(angle);
    for (std::size_t i = 0; i < sizes[c]; ++i) b.add(cx, cy, static_cast<int>(c), p.spread);
  }
  return b.finish();
}

// Upper arc centred at the origin; lower arc flipped and centred at (1, 0.5)
// so the two interleave.
Dataset make_moons(const GenSpec& spec) {
  Builder b(spec.n, spec.seed);
  const auto sizes = block_sizes(spec.n, 2);
  for (std::size_t i = 0; i < sizes[0]; ++i) {
    const double t = std::numbers::pi * grid(i, sizes[0], true);
    b.add(std::cos(t), std::sin(t), 0, spec.params.noise);
  }
  for (std::size_t i = 0; i < sizes[1]; ++i) {
    const double t = std::numbers::pi * grid(i, sizes[1], true);
    b.add(1.0 - std::cos(t), 0.5 - std::sin(t), 1, spec.params.noise);
  }
  return b.finish();
}

Dataset make_spiral(const GenSpec& spec) {
  const GenParams& p = spec.params;
  Builder b(spec.n, spec.seed);
  const auto sizes = block_sizes(spec.n, p.arms);
  for (std::size_t a = 0; a < p.arms; ++a) {
    const double phase = kTwoPi * static_cast<double>(a) / static_cast<double>(p.arms);
    for (std::size_t i = 0; i < sizes[a]; ++i) {
      const double s = grid(i, sizes[a], true);
      const double radius = p.spiral_radius * s;
      const double angle = kTwoPi * p.turns * s + phase;
      b.add(radius * std::cos(angle), radius * std::sin(angle), static_cast<int>(a), p.noise);
    }
  }
  return b.finish();
}

Dataset make_circles(const GenSpec& spec) {
  const GenParams& p = spec.params;
  Builder b(spec.n, spec.seed);
  const auto sizes = block_sizes(spec.n, 2);
  const double radii[2] = {1.0, p.factor};
  for (int ring = 0; ring < 2; ++ring) {
    for (std::size_t i = 0; i < sizes[ring]; ++i) {
      const double angle = kTwoPi * grid(i, sizes[ring], false);
      b.add(radii[ring] * std::cos(angle), radii[ring] * std::sin(angle), ring, p.noise);
    }
  }
  return b.finish();
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string_view to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::blobs:
      return "blobs";
    case DatasetKind::moons:
      return "moons";
    case DatasetKind::spiral:
      return "spiral";
    case DatasetKind::circles:
      return "circles";
  }
  return "unknown";
}

DatasetKind parse_dataset_kind(std::string_view name) {
  if (name == "blobs") return DatasetKind::blobs;
  if (name == "moons") return DatasetKind::moons;
  if (name == "spiral") return DatasetKind::spiral;
  if (name == "circles") return DatasetKind::circles;
  throw InvalidInput("unknown dataset kind '" + std::string(name) +
                     "' (expected blobs, moons, spiral or circles)");
}

Dataset generate(const GenSpec& spec) {
  validate(spec);
  switch (spec.kind) {
    case DatasetKind::blobs:
      return make_blobs(spec);
    case DatasetKind::moons:
      return make_moons(spec);
    case DatasetKind::spiral:
      return make_spiral(spec);
    case DatasetKind::circles:
      return make_circles(spec);
  }
  throw InvalidInput("generate: unknown dataset kind");
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t cols = 0;
  std::ptrdiff_t label_col = -1;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::string line;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (first_content) {
      first_content = false;
      bool any_numeric = false;
      for (const auto& f : fields) any_numeric = any_numeric || parse_double(f).has_value();
      if (!any_numeric) {
        cols = fields.size();
        for (std::size_t c = 0; c < fields.size(); ++c) {
          if (trim(fields[c]) == "label") label_col = static_cast<std::ptrdiff_t>(c);
        }
        continue;
      }
      cols = fields.size();
    }
    if (fields.size() != cols) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(cols) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = parse_double(fields[c]);
      if (!v) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric field '" +
                        trim(fields[c]) + "'");
      }
      if (static_cast<std::ptrdiff_t>(c) == label_col) {
        labels.push_back(static_cast<int>(*v));
      } else {
        values.push_back(*v);
      }
    }
    ++rows;
  }
  if (rows == 0) throw DataError(path.string() + ": no data rows");
  const std::size_t d = cols - (label_col >= 0 ? 1 : 0);
  if (d == 0) throw DataError(path.string() + ": no coordinate columns");
  std::optional<std::vector<int>> maybe_labels;
  if (label_col >= 0) maybe_labels = std::move(labels);
  try {
    return Dataset(Matrix(rows, d, std::move(values)), std::move(maybe_labels));
  } catch (const InvalidInput& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (std::size_t c = 0; c < data.d(); ++c) out << (c ? "," : "") << 'x' << c;
  if (data.labels()) out << ",label";
  out << '\n';
  for (std::size_t i = 0; i < data.n(); ++i) {
    const auto row = data.point(i);
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    if (data.labels()) out << ',' << (*data.labels())[i];
    out << '\n';
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace softvoronoi
