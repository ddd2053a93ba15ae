#include "softvoronoi/report.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "softvoronoi/error.hpp"
#include "softvoronoi/numfmt.hpp"

namespace softvoronoi {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

template <typename T, typename Parse>
std::vector<T> name_list(const json& value, const char* field, Parse&& parse) {
  std::vector<T> out;
  auto one = [&](const json& v) {
    if (!v.is_string()) throw InvalidInput(std::string("config field '") + field + "': expected a name");
    try {
      out.push_back(parse(v.get<std::string>()));
    } catch (const InvalidInput& e) {
      throw InvalidInput(std::string("config field '") + field + "': " + e.what());
    }
  };
  if (value.is_array()) {
    for (const auto& v : value) one(v);
  } else {
    one(value);
  }
  if (out.empty()) throw InvalidInput(std::string("config field '") + field + "': empty list");
  return out;
}

std::size_t get_count(const json& value, const char* field) {
  if (!value.is_number_unsigned()) {
    throw InvalidInput(std::string("config field '") + field + "': expected a non-negative integer");
  }
  return value.get<std::size_t>();
}

std::uint64_t get_seed(const json& value, const char* field) {
  if (!value.is_number_unsigned()) {
    throw InvalidInput(std::string("config field '") + field + "': expected an unsigned integer");
  }
  return value.get<std::uint64_t>();
}

double get_real(const json& value, const char* field) {
  if (!value.is_number()) {
    throw InvalidInput(std::string("config field '") + field + "': expected a number");
  }
  return value.get<double>();
}

GenParams parse_params(const json& j) {
  if (!j.is_object()) throw InvalidInput("config field 'params': expected an object");
  GenParams p;
  for (const auto& [key, value] : j.items()) {
    const std::string field = "params." + key;
    if (key == "centers") p.centers = get_count(value, field.c_str());
    else if (key == "blob_ring") p.blob_ring = get_real(value, field.c_str());
    else if (key == "spread") p.spread = get_real(value, field.c_str());
    else if (key == "noise") p.noise = get_real(value, field.c_str());
    else if (key == "arms") p.arms = get_count(value, field.c_str());
    else if (key == "spiral_radius") p.spiral_radius = get_real(value, field.c_str());
    else if (key == "turns") p.turns = get_real(value, field.c_str());
    else if (key == "factor") p.factor = get_real(value, field.c_str());
    else throw InvalidInput("config field '" + field + "': unknown field");
  }
  return p;
}

}  // namespace

SigmaSchedule SweepConfig::schedule() const {
  if (sigmas) return explicit_schedule(*sigmas);
  return sigma_schedule(sigma_min, sigma_max, levels);
}

std::uint64_t SweepConfig::effective_dataset_seed() const {
  return dataset_seed.value_or(master_seed);
}

GenSpec SweepConfig::gen_spec(DatasetKind kind) const {
  return GenSpec{kind, n, effective_dataset_seed(), params};
}

ExperimentConfig SweepConfig::experiment(DatasetKind kind, AssignMode mode,
                                         Protocol protocol) const {
  ExperimentConfig cfg;
  cfg.dataset = gen_spec(kind);
  cfg.k = k;
  cfg.iterations = iterations;
  cfg.runs = runs;
  cfg.schedule = schedule();
  cfg.mode = mode;
  cfg.protocol = protocol;
  cfg.master_seed = master_seed;
  return cfg;
}

void SweepConfig::validate() const {
  auto wrap = [](const char* field, auto&& check) {
    try {
      check();
    } catch (const InvalidInput& e) {
      throw InvalidInput(std::string("config field '") + field + "': " + e.what());
    }
  };
  if (k < 2) throw InvalidInput("config field 'k': must be >= 2");
  if (k > kMaxExhaustiveK) throw InvalidInput("config field 'k': exceeds exhaustive matching bound");
  if (iterations < 1) throw InvalidInput("config field 'T': must be >= 1");
  if (runs < 1) throw InvalidInput("config field 'M': must be >= 1");
  if (n < k) throw InvalidInput("config field 'n': must be >= k");
  if (sigmas) {
    wrap("sigmas", [&] { explicit_schedule(*sigmas); });
  } else {
    wrap("sigma_min", [&] { sigma_schedule(sigma_min, sigma_max, levels); });
  }
  for (AssignMode m : modes) {
    if (m == AssignMode::hard) throw InvalidInput("config field 'mode': must be softmax or entmax15");
  }
  for (DatasetKind kind : datasets) wrap("params", [&] { generate(GenSpec{kind, 1, 0, params}); });
}

SweepConfig parse_sweep_config(const json& j) {
  if (!j.is_object()) throw InvalidInput("config: top level must be an object");
  SweepConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "dataset") {
      cfg.datasets = name_list<DatasetKind>(value, "dataset", parse_dataset_kind);
    } else if (key == "n") {
      cfg.n = get_count(value, "n");
    } else if (key == "dataset_seed") {
      if (value.is_null()) cfg.dataset_seed.reset();
      else cfg.dataset_seed = get_seed(value, "dataset_seed");
    } else if (key == "params") {
      cfg.params = parse_params(value);
    } else if (key == "k") {
      cfg.k = get_count(value, "k");
    } else if (key == "T") {
      cfg.iterations = get_count(value, "T");
    } else if (key == "M") {
      cfg.runs = get_count(value, "M");
    } else if (key == "sigma_min") {
      cfg.sigma_min = get_real(value, "sigma_min");
    } else if (key == "sigma_max") {
      cfg.sigma_max = get_real(value, "sigma_max");
    } else if (key == "L") {
      cfg.levels = get_count(value, "L");
    } else if (key == "sigmas") {
      if (value.is_null()) {
        cfg.sigmas.reset();
        continue;
      }
      if (!value.is_array()) throw InvalidInput("config field 'sigmas': expected a list of numbers");
      std::vector<double> s;
      for (const auto& v : value) s.push_back(get_real(v, "sigmas"));
      cfg.sigmas = std::move(s);
    } else if (key == "mode") {
      cfg.modes = name_list<AssignMode>(value, "mode", parse_assign_mode);
    } else if (key == "protocol") {
      cfg.protocols = name_list<Protocol>(value, "protocol", parse_protocol);
    } else if (key == "master_seed") {
      cfg.master_seed = get_seed(value, "master_seed");
    } else {
      throw InvalidInput("config field '" + key + "': unknown field");
    }
  }
  cfg.validate();
  return cfg;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InvalidInput("config '" + path.string() + "': " + e.what());
  }
  return parse_sweep_config(j);
}

json to_json(const GenParams& p) {
  return json{{"centers", p.centers}, {"blob_ring", p.blob_ring},
              {"spread", p.spread},   {"noise", p.noise},
              {"arms", p.arms},       {"spiral_radius", p.spiral_radius},
              {"turns", p.turns},     {"factor", p.factor}};
}

json to_json(const SweepConfig& cfg) {
  json datasets = json::array();
  for (auto d : cfg.datasets) datasets.push_back(std::string(to_string(d)));
  json modes = json::array();
  for (auto m : cfg.modes) modes.push_back(std::string(to_string(m)));
  json protocols = json::array();
  for (auto p : cfg.protocols) protocols.push_back(std::string(to_string(p)));
  json j{{"dataset", datasets},        {"n", cfg.n},
         {"params", to_json(cfg.params)}, {"k", cfg.k},
         {"T", cfg.iterations},        {"M", cfg.runs},
         {"sigma_min", cfg.sigma_min}, {"sigma_max", cfg.sigma_max},
         {"L", cfg.levels},            {"mode", modes},
         {"protocol", protocols},      {"master_seed", cfg.master_seed}};
  j["dataset_seed"] = cfg.dataset_seed ? json(*cfg.dataset_seed) : json(nullptr);
  j["sigmas"] = cfg.sigmas ? json(*cfg.sigmas) : json(nullptr);
  return j;
}

json to_json(const Diagnostics& d) {
  return json{{"zero_mass_events", d.zero_mass_events},
              {"renormalized_rows", d.renormalized_rows},
              {"loss_increase_runs", d.loss_increase_runs},
              {"lloyd_monotonicity_violations", d.lloyd_monotonicity_violations},
              {"kmeans_unconverged", d.kmeans_unconverged},
              {"kmeans_runs", d.kmeans_runs},
              {"soft_runs", d.soft_runs}};
}

json to_json(const RateFit& fit) {
  return json{{"m", fit.m},
              {"b", fit.b},
              {"r2", fit.r2},
              {"points_used", fit.points_used},
              {"points_excluded", fit.points_excluded},
              {"fit_range", fit.fit_range}};
}

json to_json(const BoundReport& r) {
  json j{{"mode", std::string(to_string(r.mode))},
         {"sigma", r.sigma},
         {"deviation", r.deviation},
         {"applicable", r.applicable},
         {"vacuous", r.vacuous},
         {"pass", r.pass}};
  if (r.mode == AssignMode::softmax) {
    j["bound"] = std::isfinite(r.bound) ? json(r.bound) : json(nullptr);
  } else {
    j["ratio"] = std::isfinite(r.ratio) ? json(r.ratio) : json(nullptr);
  }
  return j;
}

json to_json(const SeparationStats& s) {
  return json{{"R", s.radius}, {"alpha", s.alpha}, {"gamma_min", s.gamma_min}};
}

void write_curve_csv(const std::vector<ConvergenceCurve>& curves,
                     const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "protocol,dataset,mode,sigma,mean_R,std_R,max_centroid_dev,n_runs\n";
  for (const auto& c : curves) {
    for (const auto& r : c.records) {
      out << to_string(c.protocol) << ',' << c.dataset << ',' << to_string(c.mode) << ','
          << format_double(r.sigma) << ',' << format_double(r.mean_r) << ','
          << format_double(r.std_r) << ',' << format_double(r.max_centroid_dev) << ','
          << r.discrepancies.size() << '\n';
    }
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

void write_runs_csv(const std::vector<ConvergenceCurve>& curves,
                    const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "protocol,dataset,mode,sigma_index,sigma,trial,discrepancy,max_dev\n";
  for (const auto& c : curves) {
    for (std::size_t l = 0; l < c.records.size(); ++l) {
      const auto& r = c.records[l];
      for (std::size_t i = 0; i < r.discrepancies.size(); ++i) {
        out << to_string(c.protocol) << ',' << c.dataset << ',' << to_string(c.mode) << ',' << l
            << ',' << format_double(r.sigma) << ',' << i << ',' << format_double(r.discrepancies[i])
            << ',' << format_double(r.max_devs[i]) << '\n';
      }
    }
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

void write_matrix_csv(const Matrix& m, const std::vector<std::string>& header,
                      const std::filesystem::path& path) {
  auto out = open_out(path);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  if (!header.empty()) out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(i, c));
    out << '\n';
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

void write_json(const json& j, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

json manifest_base() {
  return json{{"library", "softvoronoi"},
              {"version", SOFTVORONOI_VERSION},
              {"rng",
               {{"generator", "xoshiro256**"},
                {"seeding", "splitmix64"},
                {"normal", "box-muller"},
                {"child_seed", "mix64 chain: h=mix64(master); h=mix64(h^mix64(v+0x9E3779B97F4A7C15))"}}}};
}

}  // namespace softvoronoi
