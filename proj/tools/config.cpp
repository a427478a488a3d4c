#include "config.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

namespace leqg::cli {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& doc, const std::string& field) {
  if (!doc.is_array() || doc.empty() || !doc[0].is_array()) {
    throw ConfigError(field + ": expected a matrix as nested row lists");
  }
  const auto rows = static_cast<Eigen::Index>(doc.size());
  const auto cols = static_cast<Eigen::Index>(doc[0].size());
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = doc[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(field + ": ragged matrix rows");
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      const json& cell = row[static_cast<std::size_t>(j)];
      if (!cell.is_number()) {
        throw ConfigError(field + ": matrix entries must be numbers");
      }
      out(i, j) = cell.get<double>();
    }
  }
  return out;
}

const json& require(const json& doc, const std::string& key,
                    const std::string& where) {
  auto it = doc.find(key);
  if (it == doc.end()) {
    throw ConfigError(where + "." + key + ": missing field");
  }
  return *it;
}

template <typename T>
T get_or(const json& doc, const std::string& key, T fallback) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) {
    return fallback;
  }
  return it->get<T>();
}

SystemSpec parse_system(const json& doc) {
  if (!doc.is_object()) {
    throw ConfigError("system: expected an object");
  }
  const Matrix A = matrix_from_json(require(doc, "A", "system"), "system.A");
  const Matrix B = matrix_from_json(require(doc, "B", "system"), "system.B");
  const Matrix C = matrix_from_json(require(doc, "C", "system"), "system.C");
  const Matrix F = matrix_from_json(require(doc, "F", "system"), "system.F");
  const Matrix G = matrix_from_json(require(doc, "G", "system"), "system.G");
  const Matrix H = matrix_from_json(require(doc, "H", "system"), "system.H");
  const Matrix Q = matrix_from_json(require(doc, "Q", "system"), "system.Q");
  const Matrix R = matrix_from_json(require(doc, "R", "system"), "system.R");
  const double epsilon = get_or<double>(doc, "epsilon", 0.0);
  if (doc.contains("d") && doc["d"].get<Eigen::Index>() != A.rows()) {
    throw ConfigError("system.d: inconsistent with the dimension of A");
  }
  try {
    return SystemSpec(A, B, C, F, G, H, Q, R, epsilon);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
}

void validate_choice(const std::string& value,
                     std::initializer_list<const char*> allowed,
                     const std::string& field) {
  for (const char* a : allowed) {
    if (value == a) {
      return;
    }
  }
  std::ostringstream msg;
  msg << field << ": invalid value \"" << value << "\"";
  throw ConfigError(msg.str());
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) {
    throw ConfigError("config: expected a JSON object");
  }

  ExperimentConfig cfg{parse_system(require(doc, "system", "config")),
                       SweepSpec{},
                       SimOptions{},
                       TrajectoryOptions{},
                       OutputSpec{}};

  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    cfg.sweep.n = get_or<std::vector<int>>(s, "n", {});
    cfg.sweep.theta = get_or<std::vector<double>>(s, "theta", {});
    cfg.sweep.epsilon = get_or<std::vector<double>>(s, "epsilon", {});
    cfg.sweep.modes =
        get_or<std::vector<std::string>>(s, "modes", {"perfect"});
    cfg.sweep.with_mc = get_or<bool>(s, "with_mc", false);
    for (const std::string& m : cfg.sweep.modes) {
      validate_choice(m, {"perfect", "imperfect"}, "sweep.modes");
    }
    for (const int n : cfg.sweep.n) {
      if (n < 1) {
        throw ConfigError("sweep.n: agent counts must be >= 1");
      }
    }
  }

  if (doc.contains("sim")) {
    const json& s = doc["sim"];
    cfg.sim.dt = get_or<double>(s, "dt", cfg.sim.dt);
    cfg.sim.horizon = get_or<double>(s, "horizon", cfg.sim.horizon);
    cfg.sim.trials = get_or<int>(s, "trials", cfg.sim.trials);
    cfg.sim.seed = get_or<std::uint64_t>(s, "seed", cfg.sim.seed);
    cfg.sim.evader_mode =
        get_or<std::string>(s, "evader_mode", cfg.sim.evader_mode);
    validate_choice(cfg.sim.evader_mode, {"model", "frozen"},
                    "sim.evader_mode");
    if (!(cfg.sim.dt > 0.0)) {
      throw ConfigError("sim.dt: must be > 0");
    }
    if (!(cfg.sim.horizon >= cfg.sim.dt)) {
      throw ConfigError("sim.horizon: must be >= dt");
    }
    if (cfg.sim.trials < 1) {
      throw ConfigError("sim.trials: must be >= 1");
    }
  }

  if (doc.contains("trajectories")) {
    const json& t = doc["trajectories"];
    cfg.trajectories.n = get_or<int>(t, "n", cfg.trajectories.n);
    if (t.contains("theta") && !t["theta"].is_null()) {
      cfg.trajectories.theta = t["theta"].get<double>();
    }
    cfg.trajectories.spacing =
        get_or<double>(t, "spacing", cfg.trajectories.spacing);
    cfg.trajectories.measurement =
        get_or<std::string>(t, "measurement", cfg.trajectories.measurement);
    cfg.trajectories.evader =
        get_or<std::string>(t, "evader", cfg.trajectories.evader);
    cfg.trajectories.horizon =
        get_or<double>(t, "horizon", cfg.trajectories.horizon);
    validate_choice(cfg.trajectories.measurement, {"perfect", "imperfect"},
                    "trajectories.measurement");
    validate_choice(cfg.trajectories.evader, {"model", "frozen"},
                    "trajectories.evader");
    if (cfg.trajectories.n < 1) {
      throw ConfigError("trajectories.n: must be >= 1");
    }
  }

  if (doc.contains("output")) {
    const json& o = doc["output"];
    cfg.output.dir = get_or<std::string>(o, "dir", cfg.output.dir);
    cfg.output.format = get_or<std::string>(o, "format", cfg.output.format);
    validate_choice(cfg.output.format, {"csv", "json"}, "output.format");
  }

  return cfg;
}

json render_config(const ExperimentConfig& cfg) {
  json doc;
  doc["system"] = {
      {"d", cfg.system.d},
      {"A", matrix_to_json(cfg.system.A)},
      {"B", matrix_to_json(cfg.system.B)},
      {"C", matrix_to_json(cfg.system.C)},
      {"F", matrix_to_json(cfg.system.F)},
      {"G", matrix_to_json(cfg.system.G)},
      {"H", matrix_to_json(cfg.system.H)},
      {"Q", matrix_to_json(cfg.system.Q)},
      {"R", matrix_to_json(cfg.system.R)},
      {"epsilon", cfg.system.epsilon},
  };
  doc["sweep"] = {
      {"n", cfg.sweep.n},
      {"theta", cfg.sweep.theta},
      {"epsilon", cfg.sweep.epsilon},
      {"modes", cfg.sweep.modes},
      {"with_mc", cfg.sweep.with_mc},
  };
  doc["sim"] = {
      {"dt", cfg.sim.dt},
      {"horizon", cfg.sim.horizon},
      {"trials", cfg.sim.trials},
      {"seed", cfg.sim.seed},
      {"evader_mode", cfg.sim.evader_mode},
  };
  doc["trajectories"] = {
      {"n", cfg.trajectories.n},
      {"theta", cfg.trajectories.theta ? json(*cfg.trajectories.theta)
                                       : json(nullptr)},
      {"spacing", cfg.trajectories.spacing},
      {"measurement", cfg.trajectories.measurement},
      {"evader", cfg.trajectories.evader},
      {"horizon", cfg.trajectories.horizon},
  };
  doc["output"] = {
      {"dir", cfg.output.dir},
      {"format", cfg.output.format},
  };
  return doc;
}

ExperimentConfig basic_preset() {
  json doc;
  doc["system"] = {
      {"d", 1},          {"A", {{0.0}}}, {"B", {{1.0}}}, {"C", {{1.0}}},
      {"F", {{1.0}}},    {"G", {{1.0}}}, {"H", {{1.0}}}, {"Q", {{1.0}}},
      {"R", {{1.0}}},    {"epsilon", 0.0},
  };
  doc["sweep"] = {
      {"n", {1, 2, 3, 4, 5, 6, 7, 8}}, {"theta", {0.97}},
      {"epsilon", {0.1, 0.0}},         {"modes", {"perfect"}},
      {"with_mc", false},
  };
  doc["sim"] = {
      {"dt", 1e-3}, {"horizon", 50.0},        {"trials", 200},
      {"seed", 7},  {"evader_mode", "model"},
  };
  doc["trajectories"] = {
      {"n", 4},        {"theta", nullptr},         {"spacing", 1.0},
      {"measurement", "perfect"}, {"evader", "frozen"}, {"horizon", 10.0},
  };
  doc["output"] = {{"dir", "out"}, {"format", "csv"}};
  return parse_config(doc);
}

ExperimentConfig load_config(const std::optional<std::string>& preset,
                             const std::optional<std::string>& config_path) {
  json doc;
  if (preset) {
    if (*preset != "basic") {
      throw ConfigError("unknown preset \"" + *preset + "\"");
    }
    doc = render_config(basic_preset());
  }
  if (config_path) {
    std::ifstream in(*config_path);
    if (!in) {
      throw ConfigError("cannot open config file " + *config_path);
    }
    json file_doc;
    try {
      in >> file_doc;
    } catch (const json::parse_error& e) {
      throw ConfigError("config parse error in " + *config_path + ": " +
                        e.what());
    }
    if (doc.is_null()) {
      doc = std::move(file_doc);
    } else {
      doc.merge_patch(file_doc);
    }
  }
  if (doc.is_null()) {
    throw ConfigError("no configuration: pass --config <path> or --preset");
  }
  return parse_config(doc);
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string dump = render_config(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return render_config(a) == render_config(b);
}

}  // namespace leqg::cli
