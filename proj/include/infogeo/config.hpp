#pragma once

// Experiment configuration: sectioned key = value files (INI syntax).

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "infogeo/experiments.hpp"
#include "infogeo/regression.hpp"

namespace infogeo {

class ConfigError : public Error {
public:
  using Error::Error;
};

struct ExperimentConfig {
  Fixture fixture = Fixture::square_ex1;
  std::vector<int> resolutions;  ///< empty: fixture default
  std::uint64_t seed = 1;

  PsiSpec psi = find_psi_fixture("square_bump");
  bool psi_explicit = false;  ///< psi given in the file or on the command line

  ConductivitySpec theta;
  double eta = 10.0;  ///< bound on the discrete H^2 norm of theta - 1

  int spectrum_k = 40;
  SweepThresholds thresholds;
  SeedStrategy seeds;

  int sim_n = 10000;
  int sim_replicates = 2000;
  double sim_lan_norm = 0.1;  ///< h is scaled so that |I h|^2 equals this
  int sim_gram_n = 100000;
  std::vector<int> risk_n = {500, 2000, 8000};
  int risk_replicates = 200;
  EstimatorConfig estimator;

  std::string out = "out";

  std::vector<int> sweep_resolutions() const {
    return resolutions.empty() ? default_sweep_resolutions(fixture) : resolutions;
  }
  int finest() const { return sweep_resolutions().back(); }
};

namespace detail {

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &pos);
    } catch (const std::exception&) {
      throw ConfigError("not an integer list: '" + s + "'");
    }
    if (tok.find_first_not_of(" \t", pos) != std::string::npos) throw ConfigError("not an integer list: '" + s + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty integer list");
  return out;
}

template <class T>
T get_value(const boost::property_tree::ptree& node, const std::string& key) {
  try {
    return node.get_value<T>();
  } catch (const boost::property_tree::ptree_error&) {
    throw ConfigError("bad value for '" + key + "': '" + node.data() + "'");
  }
}

inline PsiKind psi_kind_from_string(const std::string& s) {
  if (s == "bump") return PsiKind::bump;
  if (s == "in_range") return PsiKind::in_range;
  if (s == "information") return PsiKind::information;
  if (s == "constant") return PsiKind::constant;
  throw ConfigError("unknown psi kind '" + s + "'");
}

}  // namespace detail

/// Applies one `section.key = value` setting.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const boost::property_tree::ptree& node) {
  using detail::get_value;
  const std::string v = node.data();
  if (key == "problem.fixture") {
    try {
      c.fixture = fixture_from_string(v);
    } catch (const PreconditionError& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "problem.resolutions") {
    c.resolutions = detail::parse_int_list(v);
  } else if (key == "problem.seed") {
    c.seed = get_value<std::uint64_t>(node, key);
  } else if (key == "psi.name") {
    try {
      c.psi = find_psi_fixture(v);
    } catch (const PreconditionError& e) {
      throw ConfigError(e.what());
    }
    c.psi_explicit = true;
  } else if (key == "psi.kind") {
    c.psi.kind = detail::psi_kind_from_string(v);
    c.psi.name = "custom";
    c.psi_explicit = true;
  } else if (key == "psi.center_x") {
    c.psi.center.x = get_value<double>(node, key);
    c.psi.name = "custom";
  } else if (key == "psi.center_y") {
    c.psi.center.y = get_value<double>(node, key);
    c.psi.name = "custom";
  } else if (key == "psi.radius") {
    c.psi.radius = get_value<double>(node, key);
    c.psi.name = "custom";
  } else if (key == "theta.amplitude") {
    c.theta.amplitude = get_value<double>(node, key);
  } else if (key == "theta.seed") {
    c.theta.seed = get_value<std::uint64_t>(node, key);
  } else if (key == "theta.eta") {
    c.eta = get_value<double>(node, key);
  } else if (key == "spectrum.k") {
    c.spectrum_k = get_value<int>(node, key);
  } else if (key == "fisher.kernel_relative") {
    c.thresholds.kernel_relative = get_value<double>(node, key);
  } else if (key == "fisher.divergent_growth") {
    c.thresholds.divergent_growth = get_value<double>(node, key);
  } else if (key == "fisher.in_range_spread") {
    c.thresholds.in_range_spread = get_value<double>(node, key);
  } else if (key == "transport.ode_tol") {
    c.seeds.trace.ode_tol = get_value<double>(node, key);
  } else if (key == "transport.lattice") {
    c.seeds.lattice = get_value<int>(node, key);
  } else if (key == "transport.targeted") {
    c.seeds.targeted = get_value<int>(node, key);
  } else if (key == "transport.rays") {
    c.seeds.rays = get_value<int>(node, key);
  } else if (key == "simulate.n") {
    c.sim_n = get_value<int>(node, key);
  } else if (key == "simulate.replicates") {
    c.sim_replicates = get_value<int>(node, key);
  } else if (key == "simulate.lan_norm") {
    c.sim_lan_norm = get_value<double>(node, key);
  } else if (key == "simulate.gram_n") {
    c.sim_gram_n = get_value<int>(node, key);
  } else if (key == "simulate.risk_n") {
    c.risk_n = detail::parse_int_list(v);
  } else if (key == "simulate.risk_replicates") {
    c.risk_replicates = get_value<int>(node, key);
  } else if (key == "simulate.k_exponent") {
    c.estimator.k_exponent = get_value<double>(node, key);
  } else if (key == "simulate.k_fixed") {
    c.estimator.k_fixed = get_value<int>(node, key);
  } else if (key == "simulate.noiseless") {
    c.estimator.noiseless = get_value<bool>(node, key);
  } else if (key == "output.dir") {
    c.out = v;
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

/// Checks ranges and the fixture/psi pairing. Builds theta on the coarsest
/// grid to test the ellipticity floor and the eta bound.
inline void validate(ExperimentConfig& c) {
  for (int n : c.sweep_resolutions())
    if (n < kMinResolution) throw ConfigError("resolution below the minimum of " + std::to_string(kMinResolution));
  if (!c.psi_explicit) {
    // default psi follows the fixture
    for (const auto& p : shipped_psi_fixtures())
      if (p.fixture == c.fixture && p.kind == PsiKind::bump) {
        c.psi = p;
        break;
      }
  }
  if (c.psi.name == "custom") c.psi.fixture = c.fixture;
  if (c.psi.fixture != c.fixture)
    throw ConfigError("psi fixture '" + c.psi.name + "' belongs to " + to_string(c.psi.fixture) + ", not " +
                      to_string(c.fixture));
  if (c.spectrum_k < 1) throw ConfigError("spectrum.k must be positive");
  if (c.sim_n < 1 || c.sim_replicates < 2 || c.sim_gram_n < 2 || c.risk_replicates < 2)
    throw ConfigError("simulation sizes out of range");
  if (!(c.sim_lan_norm > 0.0)) throw ConfigError("simulate.lan_norm must be positive");
  if (c.theta.amplitude != 0.0) {
    GridPtr g = fixture_grid(c.fixture, c.sweep_resolutions().front());
    try {
      Conductivity th = make_conductivity(g, c.theta);
      if (!th.within_eta(c.eta)) throw ConfigError("theta perturbation exceeds the eta bound");
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string("invalid theta: ") + e.what());
    }
  }
}

/// Parses an INI stream into a config (without validation).
inline void load_config(ExperimentConfig& c, std::istream& in) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  for (const auto& [section, body] : pt) {
    if (body.empty()) throw ConfigError("key '" + section + "' outside of a section");
    for (const auto& [key, node] : body) apply_setting(c, section + "." + key, node);
  }
}

inline void load_config_file(ExperimentConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  load_config(c, in);
}

/// Applies a single override given as text, e.g. ("problem.seed", "7").
inline void override_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  boost::property_tree::ptree node(value);
  apply_setting(c, key, node);
}

}  // namespace infogeo
