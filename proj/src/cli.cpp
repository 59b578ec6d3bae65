#include "mesozeta/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "mesozeta/errors.hpp"
#include "mesozeta/models.hpp"
#include "mesozeta/primes.hpp"
#include "mesozeta/zeta.hpp"

namespace mesozeta {

namespace {

// Model runs without --prime-limit or --T.
constexpr std::uint64_t kDefaultPrimeLimit = 1000000;

const std::vector<std::string> kExperiments = {"max", "moment", "decouple", "clt", "ballot"};

// Raw experiment flags; an option's count() says whether it was given.
struct ExperimentFlags {
  std::string target;
  double T = 0, theta = 0, spacing = 0, y_min = 0, y_max = 0, A = 0, alpha = 0, s_const = 0, log_coef = 0;
  std::uint64_t prime_limit = 0, seed = 0;
  std::size_t samples = 0, depth = 0, branching = 0, y_points = 0, steps = 0;
  unsigned workers = 0;
  std::string output, config;
  bool overwrite = false;
  std::map<std::string, CLI::Option*> opts;
};

void add_experiment_flags(CLI::App* sub, ExperimentFlags& f) {
  auto& o = f.opts;
  o["target"] = sub->add_option("--target", f.target, "zeta | model | gaussian-brw (max only) | gaussian (ballot only); default model");
  o["T"] = sub->add_option("--T", f.T, "zeta target: heights tau are uniform in [T, 2T] (height units, >= 1000)");
  o["prime_limit"] = sub->add_option("--prime-limit", f.prime_limit, "model target: largest prime of the Euler product (integer, default 1e6); t = log log of it");
  o["theta"] = sub->add_option("--theta", f.theta, "window exponent in (-1, 0]: half-width (log T)^theta in height units");
  o["spacing"] = sub->add_option("--spacing", f.spacing, "h-grid spacing in height units (default 0.05 / log T)");
  o["samples"] = sub->add_option("--samples", f.samples, "number of samples (count, >= 1)");
  o["seed"] = sub->add_option("--seed", f.seed, "master seed (unsigned 64-bit); sample i uses substream i");
  o["workers"] = sub->add_option("--workers", f.workers, "worker threads (count); outputs do not depend on it");
  o["output"] = sub->add_option("--output", f.output, "run directory for manifest.json, samples.csv, tails.csv (default runs/<experiment>-seed<seed>)");
  o["depth"] = sub->add_option("--depth", f.depth, "gaussian-brw: tree depth in levels (default 12)");
  o["branching"] = sub->add_option("--branching", f.branching, "gaussian-brw: children per node (default 2)");
  o["y_min"] = sub->add_option("--y-min", f.y_min, "tail grid start, in units of log|zeta| (default 1)");
  o["y_max"] = sub->add_option("--y-max", f.y_max, "tail grid end, in units of log|zeta| (default 3)");
  o["y_points"] = sub->add_option("--y-points", f.y_points, "tail grid points (count, default 9)");
  o["steps"] = sub->add_option("--steps", f.steps, "ballot: walk steps n (count, default 10)");
  o["A"] = sub->add_option("--A", f.A, "ballot: barrier offset A (>= 1, walk units)");
  o["alpha"] = sub->add_option("--alpha", f.alpha, "ballot: V / t' in (0, 2), dimensionless (default 0.5)");
  o["s_const"] = sub->add_option("--s-const", f.s_const, "ballot: schedule constant, t1 = t' - s_const log t' (default 1)");
  o["log_coef"] = sub->add_option("--log-coef", f.log_coef, "ballot: coefficient of log(t' - k) in the barrier (default 1)");
  sub->add_option("--config", f.config, "JSON config file with flat keys named like the flags (underscores); flags override it");
  sub->add_flag("--overwrite", f.overwrite, "replace an existing run in the output directory");
}

ExperimentConfig apply_flags(const ExperimentFlags& f, ExperimentConfig c) {
  auto given = [&](const char* k) { return f.opts.at(k)->count() > 0; };
  if (given("target")) c.target = target_from_string(f.target);
  if (given("T")) c.T = f.T;
  if (given("prime_limit")) c.prime_limit = f.prime_limit;
  if (given("theta")) c.theta = f.theta;
  if (given("spacing")) c.spacing = f.spacing;
  if (given("samples")) c.samples = f.samples;
  if (given("seed")) c.seed = f.seed;
  if (given("workers")) c.workers = f.workers;
  if (given("output")) c.output = f.output;
  if (given("depth")) c.depth = f.depth;
  if (given("branching")) c.branching = f.branching;
  if (given("y_min")) c.y_min = f.y_min;
  if (given("y_max")) c.y_max = f.y_max;
  if (given("y_points")) c.y_points = f.y_points;
  if (given("steps")) c.steps = f.steps;
  if (given("A")) c.A = f.A;
  if (given("alpha")) c.alpha = f.alpha;
  if (given("s_const")) c.s_const = f.s_const;
  if (given("log_coef")) c.log_coef = f.log_coef;
  // a target switch drops the other target's size parameter unless it was given too
  if (given("target")) {
    if (c.target != Target::zeta && !given("T")) c.T.reset();
    if (c.target != Target::model && !given("prime_limit")) c.prime_limit.reset();
  }
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file " + path + " is not valid JSON: " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string(e.what()) + " (in " + path + ")");
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void flatten(const nlohmann::json& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array() && !j.empty() && j.front().is_object()) {
    out << "  " << std::left << std::setw(36) << prefix << "(" << j.size() << " rows)\n";
  } else {
    out << "  " << std::left << std::setw(36) << prefix << j.dump() << "\n";
  }
}

int run_report(const CliInvocation& inv, std::ostream& out) {
  const std::filesystem::path manifest = std::filesystem::path(inv.run_dir) / "manifest.json";
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error("no manifest at " + manifest.string());
  nlohmann::json m;
  in >> m;
  out << "run        " << inv.run_dir << "\n";
  out << "experiment " << m.value("experiment", "?") << "\n";
  out << "version    " << m.value("code_version", "?") << "\n";
  out << "started    " << m.value("start_time", "?") << "\n";
  out << "finished   " << m.value("end_time", "?") << "\n";
  out << "samples    " << m.value("samples_written", 0) << " written, " << m.value("excluded", 0) << " excluded\n";
  out << "config\n";
  flatten(m["config"], "", out);
  out << "summary\n";
  flatten(m["summary"], "", out);
  return 0;
}

int run_sieve(const CliInvocation& inv, std::ostream& out) {
  SieveOptions opts;
  opts.workers = inv.config.workers;
  const PrimeTable table = sieve_primes(inv.limit, opts);
  if (!inv.cache.empty()) save_prime_cache(table, inv.cache);
  out << nlohmann::json{{"limit", inv.limit}, {"count", table.size()},
                        {"largest", table.empty() ? 0 : table.primes().back()}}.dump()
      << "\n";
  return 0;
}

int run_zeta(const CliInvocation& inv, std::ostream& out) {
  nlohmann::json j;
  if (inv.sigma != 0.5 || inv.method == "em") {
    const auto r = zeta_euler_maclaurin(inv.sigma, inv.t, em_default_terms(inv.t));
    j = {{"sigma", inv.sigma}, {"t", inv.t}, {"re", r.value.real()}, {"im", r.value.imag()},
         {"abs_zeta", std::abs(r.value)}, {"error", r.error_bound}, {"method", "euler-maclaurin"}};
  } else {
    const ZetaSample s = inv.method == "rs" ? zeta_riemann_siegel(inv.t, inv.terms) : hardy_z(inv.t);
    j = {{"sigma", 0.5}, {"t", inv.t}, {"Z", s.z}, {"theta", s.theta}, {"abs_zeta", s.abs_zeta},
         {"error", s.error}, {"method", inv.method == "rs" || inv.t >= 50 ? "riemann-siegel" : "euler-maclaurin"}};
  }
  out << j.dump() << "\n";
  return 0;
}

int run_sample_model(const CliInvocation& inv, std::ostream& out) {
  const PrimeTable table = sieve_primes(*inv.config.prime_limit);
  const std::uint64_t seed = derive_stream(inv.config.seed, inv.index);
  const RandomEulerProduct model(table, seed);
  const double k = std::isinf(inv.k) ? std::log(std::log(static_cast<double>(*inv.config.prime_limit))) : inv.k;
  const auto xt = model_eval_X_tilde(model, k, inv.h);
  out << nlohmann::json{{"seed", seed}, {"index", inv.index}, {"k", k}, {"h", inv.h},
                        {"X", model_eval_X(model, k, inv.h)}, {"X_tilde_im", xt.imag()},
                        {"variance", model_variance(table, k)}, {"primes", table.count_up_to_scale(k)}}
             .dump()
      << "\n";
  return 0;
}

int run_experiment_cmd(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  const std::filesystem::path dir = inv.config.output;
  if (std::filesystem::exists(dir / "manifest.json") && !inv.overwrite) {
    throw RunExistsError("run directory " + dir.string() + " already holds a run; pass --overwrite to replace it");
  }
  err << inv.subcommand << ": " << inv.config.samples << " samples, target " << to_string(inv.config.target)
      << ", " << inv.config.workers << " worker(s)\n";
  const std::string start = utc_now();
  const RunResult r = run_experiment(inv.subcommand, inv.config);
  const std::string end = utc_now();
  write_run(r, dir, start, end, inv.overwrite);
  err << inv.subcommand << ": done, " << r.records.size() << " samples written to " << dir.string() << "\n";
  out << r.summary.dump(2) << "\n";
  return 0;
}

}  // namespace

CliInvocation parse_args(const std::vector<std::string>& args) {
  CLI::App app{"prime-sum random walks, zeta maxima and barrier probabilities on mesoscopic intervals", "mesozeta"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");
  CliInvocation inv;

  auto* sieve = app.add_subcommand("sieve", "count primes up to a limit (optionally write a cache file)");
  sieve->add_option("--limit", inv.limit, "inclusive upper bound (integer)")->required();
  sieve->add_option("--cache", inv.cache, "write the table to this binary cache file");
  sieve->add_option("--workers", inv.config.workers, "worker threads (count)");

  auto* zeta = app.add_subcommand("zeta", "evaluate zeta(sigma + i t)");
  auto* zeta_eval = zeta->add_subcommand("eval", "evaluate at one point (the default action)");
  for (auto* z : {zeta, zeta_eval}) {
    z->add_option("--t", inv.t, "height t (real)");
    z->add_option("--sigma", inv.sigma, "real part (default 1/2; other values use Euler-Maclaurin)");
    z->add_option("--terms", inv.terms, "Riemann-Siegel correction terms, 1..4 (default 4)");
    z->add_option("--method", inv.method, "auto | rs | em (default auto: Riemann-Siegel for t >= 50)");
  }

  auto* sm = app.add_subcommand("sample-model", "one draw of the random Euler product walk");
  std::uint64_t sm_limit = 0;
  sm->add_option("--prime-limit", sm_limit, "largest prime (integer)")->required();
  sm->add_option("--seed", inv.config.seed, "master seed (unsigned 64-bit)");
  sm->add_option("--index", inv.index, "substream index (default 0)");
  sm->add_option("--k", inv.k, "scale k: primes with log p <= e^k (default log log of the limit)");
  sm->add_option("--shift", inv.h, "shift h in height units (default 0)");

  std::map<std::string, ExperimentFlags> flags;
  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> descr = {
      {"max", "tail of the centered maximum over the window"},
      {"moment", "normalized second moment over the window vs S_{t_theta}(0)"},
      {"decouple", "tail of max_h |S_{t_theta}(h) - S_{t_theta}(0)|"},
      {"clt", "KS distance of standardized S_{t_theta}(0) from N(0,1)"},
      {"ballot", "barrier event frequency vs the ballot DP and its asymptotic"}};
  for (const auto& name : kExperiments) {
    subs[name] = app.add_subcommand(name, descr.at(name));
    add_experiment_flags(subs[name], flags[name]);
  }

  auto* report = app.add_subcommand("report", "print the summary of an existing run");
  report->add_option("--run", inv.run_dir, "run directory")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    inv.help = true;
    inv.help_text = app.help();
    for (auto* s : app.get_subcommands()) inv.help_text = s->help();
    return inv;
  } catch (const CLI::CallForAllHelp&) {
    inv.help = true;
    inv.help_text = app.help("", CLI::AppFormatMode::All);
    return inv;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  const CLI::App* chosen = app.get_subcommands().front();
  inv.subcommand = chosen->get_name();
  if (inv.subcommand == "sample-model") inv.config.prime_limit = sm_limit;
  if (inv.subcommand == "zeta") {
    const CLI::App* z = zeta_eval->parsed() ? zeta_eval : zeta;
    if (z->count("--t") == 0) throw UsageError("zeta: --t is required");
  }
  if (inv.subcommand == "zeta" && (inv.terms < 1 || inv.terms > 4)) throw UsageError("--terms must be 1..4");
  if (inv.subcommand == "zeta" && inv.method != "auto" && inv.method != "rs" && inv.method != "em") {
    throw UsageError("--method must be auto, rs or em");
  }

  if (flags.count(inv.subcommand)) {
    const ExperimentFlags& f = flags[inv.subcommand];
    ExperimentConfig base;
    if (!f.config.empty()) {
      inv.config_file = f.config;
      base = load_config_file(f.config);
    }
    try {
      inv.config = apply_flags(f, base);
      ExperimentConfig& c = inv.config;
      if (c.target == Target::model && !c.prime_limit && !c.T) c.prime_limit = kDefaultPrimeLimit;
      if (c.output.empty()) c.output = "runs/" + inv.subcommand + "-seed" + std::to_string(c.seed);
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(inv.subcommand + ": " + e.what());
    }
    inv.overwrite = f.overwrite;
  }
  return inv;
}

int execute(const CliInvocation& inv, std::ostream& out, std::ostream& err) {
  if (inv.help) {
    out << inv.help_text;
    return 0;
  }
  try {
    if (inv.subcommand == "sieve") return run_sieve(inv, out);
    if (inv.subcommand == "zeta") return run_zeta(inv, out);
    if (inv.subcommand == "sample-model") return run_sample_model(inv, out);
    if (inv.subcommand == "report") return run_report(inv, out);
    return run_experiment_cmd(inv, out, err);
  } catch (const ExclusionError& e) {
    err << "error: " << e.what() << " (failing sample index " << e.first_index() << ")\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliInvocation inv;
  try {
    inv = parse_args(args);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\nrun with --help for the flag list\n";
    return 2;
  }
  return execute(inv, out, err);
}

}  // namespace mesozeta
