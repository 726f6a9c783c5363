#pragma once

// JSON conversions of reports and CSV tables with a JSON comment header.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "infogeo/config.hpp"
#include "infogeo/regression.hpp"

namespace infogeo {

using Json = nlohmann::ordered_json;

/// Finite numbers as JSON numbers; inf and nan as strings.
inline Json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

inline Json to_json(const ExperimentConfig& c) {
  Json j;
  j["fixture"] = to_string(c.fixture);
  j["resolutions"] = c.sweep_resolutions();
  j["seed"] = c.seed;
  j["psi"] = {{"name", c.psi.name},
              {"fixture", to_string(c.psi.fixture)},
              {"kind", to_string(c.psi.kind)},
              {"center", {c.psi.center.x, c.psi.center.y}},
              {"radius", c.psi.radius}};
  j["theta"] = {{"amplitude", c.theta.amplitude}, {"seed", c.theta.seed}, {"eta", c.eta}};
  j["spectrum_k"] = c.spectrum_k;
  j["fisher"] = {{"kernel_relative", c.thresholds.kernel_relative},
                 {"divergent_growth", c.thresholds.divergent_growth},
                 {"in_range_spread", c.thresholds.in_range_spread}};
  j["transport"] = {{"ode_tol", c.seeds.trace.ode_tol},
                    {"lattice", c.seeds.lattice},
                    {"targeted", c.seeds.targeted},
                    {"rays", c.seeds.rays}};
  j["simulate"] = {{"n", c.sim_n},
                   {"replicates", c.sim_replicates},
                   {"lan_norm", c.sim_lan_norm},
                   {"gram_n", c.sim_gram_n},
                   {"risk_n", c.risk_n},
                   {"risk_replicates", c.risk_replicates},
                   {"k_exponent", c.estimator.k_exponent},
                   {"k_fixed", c.estimator.k_fixed},
                   {"noiseless", c.estimator.noiseless}};
  return j;
}

inline Json to_json(const FisherSweep& s) {
  Json j;
  j["verdict"] = to_string(s.verdict);
  j["kernel_relative"] = num(s.kernel_relative);
  j["kernel_resolution"] = s.kernel_resolution;
  Json e = Json::array();
  for (const auto& x : s.entries)
    e.push_back({{"resolution", x.resolution}, {"h_mesh", x.h_mesh}, {"i_inverse", num(x.i_inverse)}});
  j["entries"] = e;
  return j;
}

inline Json to_json(const RangeVerdict& v) {
  return {{"status", to_string(v.status)},
          {"max_abs_integral", v.max_abs_integral},
          {"spread", v.spread},
          {"integral_tol", v.integral_tol},
          {"seeds", v.seeds},
          {"curves", v.curves.size()},
          {"trapped", v.trapped},
          {"unclassified", v.unclassified}};
}

inline Json to_json(const MCReport& r) {
  return {{"statistic", r.statistic},
          {"N", r.N},
          {"replicates", r.replicates},
          {"seed", r.seed},
          {"mean", r.mean},
          {"se_mean", r.se_mean},
          {"reference_mean", r.reference_mean},
          {"variance", r.variance},
          {"se_variance", r.se_variance},
          {"reference_variance", r.reference_variance},
          {"z_mean", r.z_mean()},
          {"z_variance", r.z_variance()},
          {"ks_distance", num(r.ks_distance)},
          {"low_power", r.low_power}};
}

inline Json matrix_json(const Eigen::MatrixXd& m) {
  Json j = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    j.push_back(row);
  }
  return j;
}

inline Json to_json(const GramReport& g) {
  return {{"N", g.N},
          {"seed", g.seed},
          {"empirical", matrix_json(g.empirical)},
          {"standard_error", matrix_json(g.se)},
          {"reference", matrix_json(g.reference)},
          {"max_z", g.max_z()},
          {"low_power", g.low_power}};
}

inline Json to_json(const RiskTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"N", r.N}, {"K", r.K}, {"n_mse", r.n_mse}, {"se", r.se}, {"bias", r.bias}});
  return {{"rows", rows},
          {"replicates", t.replicates},
          {"flagged_low_replicates", t.flagged},
          {"ratio_last_first", num(t.ratio_last_first())}};
}

/// A table destined for one CSV file.
struct CsvTable {
  std::string name;  ///< file stem
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  Json meta = Json::object();
};

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// CSV with a leading `# {json}` line carrying `meta`.
inline void write_csv(std::ostream& os, const CsvTable& t) {
  os << "# " << t.meta.dump() << "\n";
  for (size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& r : t.rows) {
    for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_number(r[i]);
    os << "\n";
  }
}

inline void write_csv_file(const std::string& path, const CsvTable& t) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write '" + path + "'");
  write_csv(os, t);
}

/// FNV-1a 64-bit hash, used to fingerprint configurations.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace infogeo
