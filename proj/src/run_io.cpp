#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mesozeta/experiments.hpp"

#ifndef MESOZETA_VERSION
#define MESOZETA_VERSION "unknown"
#endif

namespace mesozeta {

std::string to_string(Target target) {
  switch (target) {
    case Target::zeta: return "zeta";
    case Target::model: return "model";
    case Target::gaussian_brw: return "gaussian-brw";
    case Target::gaussian: return "gaussian";
  }
  return "?";
}

Target target_from_string(const std::string& s) {
  if (s == "zeta") return Target::zeta;
  if (s == "model") return Target::model;
  if (s == "gaussian-brw") return Target::gaussian_brw;
  if (s == "gaussian") return Target::gaussian;
  throw std::invalid_argument("unknown target '" + s + "' (zeta, model, gaussian-brw, gaussian)");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  if (!(theta > -1.0 && theta <= 0.0)) fail("theta must lie in (-1, 0]");
  if (samples < 1) fail("samples must be >= 1");
  switch (target) {
    case Target::zeta:
      if (!T) fail("target zeta needs T");
      if (prime_limit) fail("target zeta takes T, not prime_limit");
      if (!(*T >= 1e3) || !std::isfinite(*T)) fail("T must be a finite height >= 1000");
      break;
    case Target::model:
      if (!prime_limit) fail("target model needs prime_limit");
      if (T) fail("target model takes prime_limit, not T");
      if (*prime_limit < 16) fail("prime_limit must be >= 16");
      break;
    case Target::gaussian_brw:
    case Target::gaussian:
      if (T || prime_limit) fail("gaussian targets take neither T nor prime_limit");
      break;
  }
  if (spacing && !(*spacing > 0 && std::isfinite(*spacing))) fail("spacing must be > 0");
  if (depth < 1 || depth > 30) fail("depth must lie in [1, 30]");
  if (branching < 2) fail("branching must be >= 2");
  if (!(y_max >= y_min) || y_points < 1) fail("tail grid needs y_max >= y_min and y_points >= 1");
  if (steps < 1) fail("steps must be >= 1");
  if (!(A >= 1)) fail("A must be >= 1");
  if (!(alpha > 0 && alpha < 2)) fail("alpha must lie in (0, 2)");
  if (!(s_const > 0) || !(log_coef >= 0)) fail("s_const must be > 0 and log_coef >= 0");
}

double ExperimentConfig::log_T() const {
  if (target == Target::zeta && T) return std::log(*T);
  if (target == Target::model && prime_limit) return std::log(static_cast<double>(*prime_limit));
  throw std::invalid_argument("log T is defined for the zeta and model targets");
}

double ExperimentConfig::t() const { return std::log(log_T()); }

double ExperimentConfig::grid_spacing() const { return spacing ? *spacing : 0.05 / log_T(); }

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["target"] = to_string(c.target);
  j["T"] = c.T ? nlohmann::json(*c.T) : nlohmann::json(nullptr);
  j["prime_limit"] = c.prime_limit ? nlohmann::json(*c.prime_limit) : nlohmann::json(nullptr);
  j["theta"] = c.theta;
  j["spacing"] = c.spacing ? nlohmann::json(*c.spacing) : nlohmann::json(nullptr);
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["output"] = c.output;
  j["depth"] = c.depth;
  j["branching"] = c.branching;
  j["y_min"] = c.y_min;
  j["y_max"] = c.y_max;
  j["y_points"] = c.y_points;
  j["steps"] = c.steps;
  j["A"] = c.A;
  j["alpha"] = c.alpha;
  j["s_const"] = c.s_const;
  j["log_coef"] = c.log_coef;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  static const std::set<std::string> known = {
      "target", "T", "prime_limit", "theta", "spacing", "samples", "seed", "workers", "output",
      "depth", "branching", "y_min", "y_max", "y_points", "steps", "A", "alpha", "s_const", "log_coef"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  auto real = [&](const char* key, double& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) throw std::invalid_argument(std::string("config key '") + key + "' must be a number");
    dst = j[key].get<double>();
  };
  auto opt_real = [&](const char* key, std::optional<double>& dst) {
    if (!j.contains(key)) return;
    if (j[key].is_null()) {
      dst.reset();
      return;
    }
    double v;
    real(key, v);
    dst = v;
  };
  auto count = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_unsigned() && !(j[key].is_number_integer() && j[key].get<long long>() >= 0)) {
      throw std::invalid_argument(std::string("config key '") + key + "' must be a non-negative integer");
    }
    dst = static_cast<std::remove_reference_t<decltype(dst)>>(j[key].get<std::uint64_t>());
  };
  if (j.contains("target")) {
    if (!j["target"].is_string()) throw std::invalid_argument("config key 'target' must be a string");
    c.target = target_from_string(j["target"].get<std::string>());
  }
  opt_real("T", c.T);
  if (j.contains("prime_limit")) {
    if (j["prime_limit"].is_null()) {
      c.prime_limit.reset();
    } else {
      std::uint64_t v = 0;
      count("prime_limit", v);
      c.prime_limit = v;
    }
  }
  real("theta", c.theta);
  opt_real("spacing", c.spacing);
  count("samples", c.samples);
  count("seed", c.seed);
  count("workers", c.workers);
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw std::invalid_argument("config key 'output' must be a string");
    c.output = j["output"].get<std::string>();
  }
  count("depth", c.depth);
  count("branching", c.branching);
  real("y_min", c.y_min);
  real("y_max", c.y_max);
  count("y_points", c.y_points);
  count("steps", c.steps);
  real("A", c.A);
  real("alpha", c.alpha);
  real("s_const", c.s_const);
  real("log_coef", c.log_coef);
  return c;
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string samples_csv(const RunResult& result) {
  std::string s = "index,tau_or_seed,S_ttheta0,max_centered,argmax_h,Z2,decouple_max,flags\n";
  for (const auto& r : result.records) {
    s += std::to_string(r.index);
    s += ',';
    s += std::isnan(r.tau) ? std::to_string(r.seed) : format_real(r.tau);
    for (double v : {r.S_ttheta0, r.max_centered, r.argmax_h, r.Z2, r.decouple_max}) {
      s += ',';
      s += format_real(v);
    }
    s += ',';
    s += r.flags ? std::to_string(*r.flags) : "nan";
    s += '\n';
  }
  return s;
}

std::string tails_csv(const TailEstimate& tail) {
  std::string s = "y,emp_p,se,predicted_g\n";
  for (std::size_t i = 0; i < tail.y.size(); ++i) {
    s += format_real(tail.y[i]) + ',' + format_real(tail.emp_p[i]) + ',' + format_real(tail.se[i]) + ',' +
         format_real(tail.predicted_g[i]) + '\n';
  }
  return s;
}

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << content;
  if (!f) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace

void write_run(const RunResult& result, const std::filesystem::path& dir, const std::string& start_time,
               const std::string& end_time, bool overwrite) {
  if (std::filesystem::exists(dir / "manifest.json") && !overwrite) {
    throw RunExistsError("run directory " + dir.string() + " already holds a run; pass --overwrite to replace it");
  }
  std::filesystem::create_directories(dir);
  nlohmann::json m;
  m["experiment"] = result.experiment;
  m["config"] = config_to_json(result.config);
  m["code_version"] = MESOZETA_VERSION;
  m["start_time"] = start_time;
  m["end_time"] = end_time;
  m["samples_written"] = result.records.size();
  m["excluded"] = result.excluded.size();
  m["excluded_indices"] = result.excluded;
  m["summary"] = result.summary;
  write_file(dir / "samples.csv", samples_csv(result));
  if (result.tail) {
    write_file(dir / "tails.csv", tails_csv(*result.tail));
  } else {
    std::filesystem::remove(dir / "tails.csv");
  }
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace mesozeta
