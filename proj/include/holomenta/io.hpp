#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "holomenta/expr.hpp"
#include "holomenta/integrate.hpp"
#include "holomenta/mechanics.hpp"
#include "holomenta/rng.hpp"
#include "holomenta/symmetry.hpp"
#include "holomenta/types.hpp"

namespace holomenta::io {

using Json = nlohmann::ordered_json;

// --- JSON system configs ------------------------------------------------------

struct SampleBox {
  Vec q_lo, q_hi, v_lo, v_hi;
};

/// A system loaded from a JSON config: every matrix entry is an expression
/// in the chart coordinates, with named parameters substituted structurally
/// after parsing.
struct LoadedConfig {
  std::string name;
  mech::MechanicalSystem system;
  sym::LieAlgebraAction action;
  std::vector<Vec> sample_points;  // rows of length n or n + r
  std::optional<SampleBox> sample_box;
};

namespace detail {

inline expr::BoundExpr compile_entry(const std::string& source,
                                     const std::vector<std::string>& coords,
                                     const expr::Bindings& params) {
  expr::Expression e = expr::parse(source);
  e.root = expr::substitute(e.root, params);
  return expr::BoundExpr(e, coords);
}

using ExprMatrix = std::vector<std::vector<expr::BoundExpr>>;

inline ExprMatrix compile_matrix(const Json& rows,
                                 const std::vector<std::string>& coords,
                                 const expr::Bindings& params,
                                 std::size_t want_cols, const char* what) {
  if (!rows.is_array())
    throw ConfigError(std::string(what) + " must be an array of rows");
  ExprMatrix out;
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != want_cols)
      throw ConfigError(std::string(what) + " rows must have " +
                        std::to_string(want_cols) + " entries");
    std::vector<expr::BoundExpr> r;
    for (const auto& cell : row) {
      if (!cell.is_string())
        throw ConfigError(std::string(what) + " entries must be expression strings");
      try {
        r.push_back(compile_entry(cell.get<std::string>(), coords, params));
      } catch (const Error& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline Vec json_vec(const Json& arr) {
  Vec out(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) out[i] = arr[i].get<double>();
  return out;
}

}  // namespace detail

inline LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config JSON parse error: ") + e.what());
  }

  LoadedConfig cfg;
  cfg.name = doc.value("name", std::string("unnamed"));
  if (!doc.contains("coordinates") || !doc["coordinates"].is_array())
    throw ConfigError("config requires a 'coordinates' array");
  std::vector<std::string> coords =
      doc["coordinates"].get<std::vector<std::string>>();
  const int n = static_cast<int>(coords.size());
  if (n == 0) throw ConfigError("'coordinates' must be nonempty");

  expr::Bindings params;
  if (doc.contains("params"))
    for (auto& [key, val] : doc["params"].items())
      params[key] = val.get<double>();

  if (!doc.contains("metric")) throw ConfigError("config requires 'metric'");
  auto metric_rows = detail::compile_matrix(doc["metric"], coords, params,
                                            n, "metric");
  if (static_cast<int>(metric_rows.size()) != n)
    throw ConfigError("metric must be n x n");

  if (!doc.contains("distribution"))
    throw ConfigError("config requires 'distribution'");
  auto d_rows = detail::compile_matrix(doc["distribution"], coords, params,
                                       n, "distribution");
  const int r = static_cast<int>(d_rows.size());
  if (r == 0 || r > n) throw ConfigError("distribution must have 1..n rows");

  detail::ExprMatrix w_rows;
  if (doc.contains("vertical_complement"))
    w_rows = detail::compile_matrix(doc["vertical_complement"], coords, params,
                                    n, "vertical_complement");
  if (static_cast<int>(w_rows.size()) != n - r)
    throw ConfigError("vertical_complement must have n - r rows");

  detail::ExprMatrix gen_rows;
  if (doc.contains("action_generators"))
    gen_rows = detail::compile_matrix(doc["action_generators"], coords, params,
                                      n, "action_generators");

  expr::BoundExpr potential;
  {
    const std::string src = doc.value("potential", std::string("0"));
    try {
      potential = detail::compile_entry(src, coords, params);
    } catch (const Error& e) {
      throw ConfigError(std::string("potential: ") + e.what());
    }
  }

  mech::MechanicalSystem sys;
  sys.n = n;
  sys.r = r;
  sys.coord_names = coords;
  sys.metric = [metric_rows, n](const Vec& q) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = metric_rows[i][j](q);
    return m;
  };
  sys.potential = [potential](const Vec& q) { return potential(q); };
  sys.d_frame = [d_rows, n, r](const Vec& q) {
    Mat m(n, r);
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < n; ++i) m(i, j) = d_rows[j][i](q);
    return m;
  };
  const int wc = n - r;
  sys.w_frame = [w_rows, n, wc](const Vec& q) {
    Mat m(n, wc);
    for (int j = 0; j < wc; ++j)
      for (int i = 0; i < n; ++i) m(i, j) = w_rows[j][i](q);
    return m;
  };
  cfg.system = sys;

  cfg.action.s = static_cast<int>(gen_rows.size());
  if (cfg.action.s > 0) {
    const int s = cfg.action.s;
    cfg.action.generators = [gen_rows, n, s](const Vec& q) {
      Mat m(n, s);
      for (int j = 0; j < s; ++j)
        for (int i = 0; i < n; ++i) m(i, j) = gen_rows[j][i](q);
      return m;
    };
  }

  if (doc.contains("sample_points")) {
    for (const auto& row : doc["sample_points"]) {
      Vec v = detail::json_vec(row);
      if (v.size() != n && v.size() != n + r)
        throw ConfigError("sample_points rows must have n or n+r entries");
      cfg.sample_points.push_back(std::move(v));
    }
  }
  if (doc.contains("sample_box")) {
    const auto& box = doc["sample_box"];
    SampleBox sb;
    sb.q_lo = detail::json_vec(box.at("q_min"));
    sb.q_hi = detail::json_vec(box.at("q_max"));
    sb.v_lo = detail::json_vec(box.at("v_min"));
    sb.v_hi = detail::json_vec(box.at("v_max"));
    if (sb.q_lo.size() != n || sb.q_hi.size() != n || sb.v_lo.size() != r ||
        sb.v_hi.size() != r)
      throw ConfigError("sample_box bounds have wrong dimensions");
    cfg.sample_box = sb;
  }

  // Shape validation: metric SPD wherever we are told the system lives.
  std::vector<Vec> probes;
  for (const auto& p : cfg.sample_points) probes.push_back(p.head(n));
  if (probes.empty() && cfg.sample_box)
    probes.push_back(0.5 * (cfg.sample_box->q_lo + cfg.sample_box->q_hi));
  if (probes.empty()) probes.push_back(Vec::Zero(n));
  for (const auto& q : probes) {
    const Mat kappa = sys.metric(q);
    Eigen::SelfAdjointEigenSolver<Mat> eig(kappa);
    if (eig.eigenvalues().minCoeff() <= 0.0)
      throw ConfigError("metric is not positive definite at a sample point");
    if ((kappa - kappa.transpose()).norm() > 1e-9 * std::max(1.0, kappa.norm()))
      throw ConfigError("metric is not symmetric at a sample point");
  }
  return cfg;
}

/// States for the analysis pipeline: explicit sample_points first (missing
/// v-components drawn uniformly from [-1, 1]), then seeded draws from the
/// sample box until `count` states exist.
inline std::vector<mech::MPoint> config_samples(const LoadedConfig& cfg,
                                                int count,
                                                std::uint64_t seed) {
  const int n = cfg.system.n, r = cfg.system.r;
  SampleRng rng(seed);
  std::vector<mech::MPoint> out;
  for (const auto& row : cfg.sample_points) {
    mech::MPoint m;
    m.q = row.head(n);
    if (row.size() == n + r) {
      m.v = row.tail(r);
    } else {
      m.v = Vec(r);
      for (int i = 0; i < r; ++i) m.v[i] = rng.uniform(-1.0, 1.0);
    }
    out.push_back(std::move(m));
    if (static_cast<int>(out.size()) >= count) break;
  }
  while (static_cast<int>(out.size()) < count) {
    if (!cfg.sample_box)
      throw ConfigError(
          "config must provide sample_points or a sample_box for analysis");
    mech::MPoint m;
    m.q = rng.uniform_vec(cfg.sample_box->q_lo, cfg.sample_box->q_hi);
    m.v = rng.uniform_vec(cfg.sample_box->v_lo, cfg.sample_box->v_hi);
    out.push_back(std::move(m));
  }
  return out;
}

// --- output files ---------------------------------------------------------------

inline void write_file_atomic(const std::string& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw Error("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// CSV with header t,<coords>,v_0..v_{r-1},energy[,<observables>]; values
/// carry 17 significant digits so doubles round-trip bitwise.
inline std::string trajectory_csv(
    const mech::MechanicalSystem& sys, const ode::Trajectory& traj,
    const std::vector<std::pair<std::string, ode::Observable>>& observables) {
  std::string out = "t";
  for (const auto& c : sys.coord_names) out += "," + c;
  for (int i = 0; i < sys.r; ++i) out += ",v_" + std::to_string(i);
  out += ",energy";
  for (const auto& [name, fn] : observables) out += "," + name;
  out += "\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const auto& m = traj.states[k];
    out += format_double(traj.times[k]);
    for (int i = 0; i < sys.n; ++i) out += "," + format_double(m.q[i]);
    for (int i = 0; i < sys.r; ++i) out += "," + format_double(m.v[i]);
    out += "," + format_double(mech::hamiltonian_m(sys, m));
    for (const auto& [name, fn] : observables) out += "," + format_double(fn(m));
    out += "\n";
  }
  return out;
}

struct ReportMeta {
  std::string system;
  std::string w_variant;
  double residual_tol = 1e-7;
  double drift_tol = 1e-8;
  double rank_tol = geom::kDefaultRankTol;
  int sample_count = 0;
  std::uint64_t seed = 0;
};

inline Json analysis_report_json(const sym::PipelineResult& result,
                                 const std::vector<mech::MPoint>& samples,
                                 const ReportMeta& meta) {
  Json doc;
  doc["system"] = meta.system;
  if (!meta.w_variant.empty()) doc["w_variant"] = meta.w_variant;
  doc["dimension_assumption"] = result.dim_assumption;
  doc["rank_S"] = result.rank_s;
  doc["vertical_symmetry"] = result.vertical_symmetry;
  Json candidates = Json::array();
  for (const auto& r : result.reports) {
    Json c;
    c["eta"] = std::vector<double>(r.eta.data(), r.eta.data() + r.eta.size());
    c["jk_residual_max"] = r.jk_residual_max;
    c["drift"] = r.drift;
    c["verdict"] = sym::to_string(r.verdict);
    candidates.push_back(std::move(c));
  }
  doc["candidates"] = std::move(candidates);
  doc["tolerances"] = {{"residual", meta.residual_tol},
                       {"drift", meta.drift_tol},
                       {"rank", meta.rank_tol}};
  Json points = Json::array();
  for (const auto& m : samples) {
    std::vector<double> row(m.q.data(), m.q.data() + m.q.size());
    row.insert(row.end(), m.v.data(), m.v.data() + m.v.size());
    points.push_back(row);
  }
  doc["samples"] = {{"count", meta.sample_count},
                    {"seed", meta.seed},
                    {"points", std::move(points)}};
  return doc;
}

}  // namespace holomenta::io
