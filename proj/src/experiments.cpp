#include "mesozeta/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "mesozeta/barriers.hpp"
#include "mesozeta/dirichlet.hpp"
#include "mesozeta/errors.hpp"
#include "mesozeta/models.hpp"
#include "mesozeta/primes.hpp"
#include "mesozeta/zeta.hpp"

namespace mesozeta {

namespace {

constexpr double kMaxExcludedFraction = 1e-3;

// Runs fn(i) for i in [0, n) on `workers` threads. Exceptions are caught per
// index and reported through `failed`.
template <class Fn>
void for_each_sample(std::size_t n, unsigned workers, std::vector<char>& failed, Fn fn) {
  failed.assign(n, 0);
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (const std::exception&) {
        failed[i] = 1;
      }
    }
  };
  workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), std::max<std::size_t>(n, 1)));
  if (workers == 1) {
    body();
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& th : pool) th.join();
}

bool record_finite(const SampleRecord& r, bool s0, bool max, bool z2, bool dec) {
  auto ok = [](bool needed, double v) { return !needed || std::isfinite(v); };
  return ok(s0, r.S_ttheta0) && ok(max, r.max_centered) && ok(max, r.argmax_h) && ok(z2, r.Z2) &&
         ok(dec, r.decouple_max);
}

// Moves finite records into the result, counts the rest and enforces the
// exclusion threshold.
void collect(RunResult& out, std::vector<SampleRecord>& recs, const std::vector<char>& failed,
             bool s0, bool max, bool z2, bool dec) {
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (failed[i] || !record_finite(recs[i], s0, max, z2, dec)) {
      out.excluded.push_back(i);
    } else {
      out.records.push_back(recs[i]);
    }
  }
  const double frac = recs.empty() ? 0.0 : static_cast<double>(out.excluded.size()) / static_cast<double>(recs.size());
  if (frac > kMaxExcludedFraction) {
    std::ostringstream msg;
    msg << out.excluded.size() << " of " << recs.size()
        << " samples excluded (non-finite or failed evaluation); first at index " << out.excluded.front();
    throw ExclusionError(msg.str(), out.excluded.front());
  }
}

double centering(double t_prime) { return t_prime - 0.75 * std::log(t_prime); }

std::size_t argmax_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

// Shifted-walk sample times: 1, 2, ... below t', then t'.
std::vector<double> event_times(double t_prime) {
  std::vector<double> times;
  for (double k = 1; k < t_prime; k += 1) times.push_back(k);
  if (t_prime > 0) times.push_back(t_prime);
  return times;
}

// Shared per-run state for the model and zeta targets.
struct Context {
  const ExperimentConfig& cfg;
  std::shared_ptr<const PrimeTable> table;  // model: all primes <= limit; zeta: primes for S (and flags)
  bool zeta_flags = false;                  // zeta table reaches T
  HGrid grid;
  PrimeRange small;  // primes of S_{t_theta}
  PrimeRange full;   // model: every prime
};

Context make_context(const ExperimentConfig& cfg, bool need_grid) {
  std::shared_ptr<const PrimeTable> table;
  bool zeta_flags = false;
  if (cfg.target == Target::model) {
    table = std::make_shared<const PrimeTable>(sieve_primes(*cfg.prime_limit));
  } else if (cfg.target == Target::zeta) {
    const double small_limit = std::exp(std::exp(cfg.t_theta()));
    const double T = *cfg.T;
    try {
      table = std::make_shared<const PrimeTable>(sieve_primes(static_cast<std::uint64_t>(T)));
      zeta_flags = true;
    } catch (const ResourceError&) {
      table = std::make_shared<const PrimeTable>(sieve_primes(static_cast<std::uint64_t>(small_limit) + 1));
    }
  } else {
    throw std::invalid_argument("target " + to_string(cfg.target) + " has no h-grid");
  }
  const double hw = std::pow(cfg.log_T(), cfg.theta);
  Context c{cfg, table, zeta_flags, HGrid(0.0, hw, cfg.grid_spacing()), {}, {}};
  if (need_grid) check_memory_budget(c.grid.size() * sizeof(double) * 4 * std::max(1u, cfg.workers), "h-grid");
  c.small = table->primes_in_scale(-std::numeric_limits<double>::infinity(), cfg.t_theta());
  c.full = table->slice(0, table->size());
  return c;
}

struct Needs {
  bool full_grid = false;   // log|zeta| or its model analogue on the grid
  bool small_grid = false;  // S_{t_theta} on the grid
  bool flags = false;
};

SampleRecord evaluate_sample(const Context& c, std::size_t i, Needs needs) {
  const ExperimentConfig& cfg = c.cfg;
  SampleRecord r;
  r.index = i;
  const double hw = c.grid.half_width();
  const std::size_t center = c.grid.half_count();
  const bool theta_zero = cfg.theta == 0.0;

  std::vector<double> full, small;
  if (cfg.target == Target::model) {
    r.seed = derive_stream(cfg.seed, i);
    const RandomEulerProduct model(*c.table, r.seed);
    if (needs.full_grid) full = model_eval_grid(model, c.full, c.grid);
    if (needs.small_grid) {
      small = model_eval_grid(model, c.small, c.grid);
      r.S_ttheta0 = theta_zero ? 0.0 : small[center];
    } else {
      r.S_ttheta0 = theta_zero ? 0.0 : model_eval_range(model, c.small, 0.0);
    }
    if (needs.full_grid) {
      const std::size_t am = argmax_first(full);
      r.argmax_h = c.grid.point(am);
      r.max_centered = full[am] - r.S_ttheta0 - centering(cfg.t_prime());
      r.Z2 = normalized_trapezoid_exp2(full, c.grid.spacing(), hw);
      if (needs.flags) {
        const auto times = event_times(cfg.t_prime());
        const WalkTrajectory traj = model_trajectory(model, times, cfg.t_theta(), r.argmax_h);
        r.flags = check_events(traj, make_max_spec(cfg.t(), cfg.theta, 1.0)).bits();
      }
    }
  } else {
    Rng rng = make_stream(cfg.seed, i);
    const double T = *cfg.T;
    r.tau = T + T * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (needs.small_grid) {
      small = eval_range_grid(c.small, r.tau, c.grid);
      r.S_ttheta0 = theta_zero ? 0.0 : small[center];
    } else {
      r.S_ttheta0 = theta_zero ? 0.0 : eval_range(c.small, r.tau, 0.0);
    }
    if (needs.full_grid) {
      full.resize(c.grid.size());
      for (std::size_t j = 0; j < full.size(); ++j) {
        full[j] = std::log(hardy_z(r.tau + c.grid.point(j)).abs_zeta);
      }
      const std::size_t am = argmax_first(full);
      r.argmax_h = c.grid.point(am);
      r.max_centered = full[am] - r.S_ttheta0 - centering(cfg.t_prime());
      r.Z2 = normalized_trapezoid_exp2(full, c.grid.spacing(), hw);
      if (needs.flags && c.zeta_flags) {
        const auto times = event_times(cfg.t_prime());
        const WalkTrajectory traj = shifted_trajectory(*c.table, times, cfg.t_theta(), r.tau, r.argmax_h);
        r.flags = check_events(traj, make_max_spec(cfg.t(), cfg.theta, 1.0)).bits();
      }
    }
  }
  if (needs.small_grid) {
    double d = 0.0;
    for (double v : small) d = std::max(d, std::fabs(v - small[center]));
    r.decouple_max = theta_zero ? 0.0 : d;
  }
  return r;
}

RunResult grid_run(const std::string& name, const Context& c, Needs needs) {
  const ExperimentConfig& cfg = c.cfg;
  RunResult out;
  out.experiment = name;
  out.config = cfg;
  std::vector<SampleRecord> recs(cfg.samples);
  std::vector<char> failed;
  for_each_sample(cfg.samples, cfg.workers, failed, [&](std::size_t i) { recs[i] = evaluate_sample(c, i, needs); });
  collect(out, recs, failed, true, needs.full_grid, needs.full_grid, needs.small_grid);
  out.summary["grid_size"] = c.grid.size();
  out.summary["grid_spacing"] = c.grid.spacing();
  out.summary["half_width"] = c.grid.half_width();
  out.summary["t"] = cfg.t();
  out.summary["t_prime"] = cfg.t_prime();
  out.summary["t_theta"] = cfg.t_theta();
  out.summary["small_primes"] = c.small.size();
  if (cfg.target == Target::zeta && needs.flags && !c.zeta_flags) {
    out.summary["flags"] = "unavailable: the prime table for T exceeds the memory budget";
  }
  return out;
}

std::vector<double> y_grid(const ExperimentConfig& cfg) {
  std::vector<double> y(cfg.y_points);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = y.size() == 1 ? cfg.y_min
                         : cfg.y_min + (cfg.y_max - cfg.y_min) * static_cast<double>(i) / static_cast<double>(y.size() - 1);
  }
  return y;
}

nlohmann::json fit_json(const LinearFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"points", f.points}};
}

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
  mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
}

RunResult run_brw_max(const ExperimentConfig& cfg) {
  RunResult out;
  out.experiment = "max";
  out.config = cfg;
  const double b = static_cast<double>(cfg.branching);
  const double variance = 0.5 * std::log(b);
  const double t_prime = static_cast<double>(cfg.depth) * std::log(b);
  std::vector<SampleRecord> recs(cfg.samples);
  std::vector<char> failed;
  for_each_sample(cfg.samples, cfg.workers, failed, [&](std::size_t i) {
    SampleRecord& r = recs[i];
    r.index = i;
    r.seed = derive_stream(cfg.seed, i);
    Rng rng(r.seed);
    const BrwTree tree = sample_brw(cfg.depth, cfg.branching, rng, variance);
    r.max_centered = brw_max(tree) - centering(t_prime);
  });
  for (auto& r : recs) r.argmax_h = 0.0;  // no h-grid; keeps the finiteness check uniform
  collect(out, recs, failed, false, true, false, false);
  for (auto& r : out.records) r.argmax_h = kNaN;
  out.summary["t_prime"] = t_prime;
  out.summary["level_variance"] = variance;
  return out;
}

}  // namespace

RunResult run_max_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunResult out;
  double t_prime;
  if (cfg.target == Target::gaussian_brw) {
    out = run_brw_max(cfg);
    t_prime = out.summary["t_prime"].get<double>();
  } else {
    out = grid_run("max", make_context(cfg, true), {true, false, true});
    t_prime = cfg.t_prime();
  }
  std::vector<double> v;
  for (const auto& r : out.records) v.push_back(r.max_centered);
  out.tail = estimate_tail(v, y_grid(cfg), t_prime);
  double mean, sd;
  mean_sd(v, mean, sd);
  out.summary["mean_centered"] = mean;
  out.summary["sd_centered"] = sd;
  out.summary["se_mean_centered"] = sd / std::sqrt(static_cast<double>(v.size()));
  out.summary["tail_fit"] = fit_json(out.tail->fit);
  return out;
}

RunResult run_moment_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.target == Target::gaussian_brw || cfg.target == Target::gaussian) {
    throw std::invalid_argument("the moment experiment needs target zeta or model");
  }
  RunResult out = grid_run("moment", make_context(cfg, true), {true, false, false});
  if (cfg.theta == 0.0) {
    out.summary["notice"] = "theta = 0: S_{t_theta}(0) is identically 0, regression skipped";
    return out;
  }
  std::vector<double> x, y;
  for (const auto& r : out.records) {
    x.push_back(r.S_ttheta0);
    y.push_back(std::log(r.Z2));
  }
  try {
    out.summary["fit"] = fit_json(fit_loglinear(x, y));
  } catch (const std::invalid_argument& e) {
    out.summary["notice"] = std::string("regression skipped: ") + e.what();
  }
  return out;
}

RunResult run_decoupling_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.target == Target::gaussian_brw || cfg.target == Target::gaussian) {
    throw std::invalid_argument("the decoupling experiment needs target zeta or model");
  }
  RunResult out = grid_run("decouple", make_context(cfg, true), {false, true, false});
  std::vector<double> d;
  for (const auto& r : out.records) d.push_back(r.decouple_max);
  std::sort(d.begin(), d.end());
  if (d.back() == 0.0) {
    out.summary["notice"] = "theta = 0: the statistic is identically 0, fits skipped";
    return out;
  }
  // x-grid from the median to the 99.5% quantile
  auto quantile = [&](double q) { return d[static_cast<std::size_t>(q * static_cast<double>(d.size() - 1))]; };
  const double lo = quantile(0.5), hi = quantile(0.995);
  std::vector<double> xs;
  for (int i = 0; i < 16; ++i) xs.push_back(lo + (hi - lo) * i / 15.0);
  const TailEstimate tail = estimate_tail(d, xs);
  std::vector<double> fx, fx2, fy, fw;
  for (std::size_t i = 0; i < tail.y.size(); ++i) {
    const double p = tail.emp_p[i];
    if (!(p > 0 && p < 1)) continue;
    fx.push_back(tail.y[i]);
    fx2.push_back(tail.y[i] * tail.y[i]);
    fy.push_back(std::log(p));
    fw.push_back((p / tail.se[i]) * (p / tail.se[i]));
  }
  try {
    const LinearFit lin = fit_loglinear(fx, fy, fw);
    const LinearFit quad = fit_loglinear(fx2, fy, fw);
    out.summary["fit_x"] = fit_json(lin);
    out.summary["fit_x2"] = fit_json(quad);
    out.summary["better"] = quad.r2 > lin.r2 ? "x2" : "x";
  } catch (const std::invalid_argument& e) {
    out.summary["notice"] = std::string("fits skipped: ") + e.what();
  }
  nlohmann::json tj = nlohmann::json::array();
  for (std::size_t i = 0; i < tail.y.size(); ++i) {
    tj.push_back({{"x", tail.y[i]}, {"emp_p", tail.emp_p[i]}, {"se", tail.se[i]}});
  }
  out.summary["tail"] = tj;
  return out;
}

RunResult run_clt_check(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.target == Target::gaussian_brw || cfg.target == Target::gaussian) {
    throw std::invalid_argument("the CLT check needs target zeta or model");
  }
  const Context c = make_context(cfg, false);
  RunResult out = grid_run("clt", c, {false, false, false});
  if (cfg.theta == 0.0) {
    out.summary["notice"] = "theta = 0: S_{t_theta}(0) is identically 0, KS skipped";
    return out;
  }
  // exact variance of the sampled sum
  const double var_exact = model_variance(c.small);
  const double var_paper = 0.5 * std::fabs(cfg.theta) * cfg.t();
  std::vector<double> s;
  for (const auto& r : out.records) s.push_back(r.S_ttheta0);
  auto ks_with = [&](double var) {
    std::vector<double> z(s);
    for (double& v : z) v /= std::sqrt(var);
    return ks_distance(z, standard_normal_cdf);
  };
  double mean, sd;
  mean_sd(s, mean, sd);
  out.summary["variance_exact"] = var_exact;
  out.summary["variance_paper"] = var_paper;
  out.summary["sample_mean"] = mean;
  out.summary["sample_variance"] = sd * sd;
  out.summary["ks"] = ks_with(var_exact);
  out.summary["ks_paper_normalization"] = ks_with(var_paper);
  return out;
}

RunResult run_ballot_comparison(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.target != Target::gaussian && cfg.target != Target::model) {
    throw std::invalid_argument("the ballot comparison needs target gaussian or model");
  }
  RunResult out;
  out.experiment = "ballot";
  out.config = cfg;
  const std::size_t n = cfg.steps;

  // per-step variances, and for the model the primes of each step
  std::vector<double> var(n, 0.5);
  std::vector<PrimeRange> step_ranges;
  std::shared_ptr<const PrimeTable> table;
  if (cfg.target == Target::model) {
    table = std::make_shared<const PrimeTable>(sieve_primes(*cfg.prime_limit));
    const double t = cfg.t();
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j <= n; ++j) {
      const double k = t * static_cast<double>(j) / static_cast<double>(n);
      step_ranges.push_back(table->primes_in_scale(prev, k));
      var[j - 1] = model_variance(step_ranges.back());
      prev = k;
    }
  }
  // time in units where a step of variance 1/2 lasts 1
  std::vector<double> s(n);
  double acc = 0;
  for (std::size_t j = 0; j < n; ++j) s[j] = (acc += 2 * var[j]);
  const double t_prime = s.back();
  const BarrierSpec spec = make_partial_spec(t_prime, 0.0, cfg.A, cfg.alpha, cfg.s_const, cfg.log_coef);
  const double V = cfg.alpha * t_prime;
  std::vector<double> barrier(n, kPlusInf);
  for (std::size_t j = 0; j < n; ++j) {
    if (s[j] <= spec.t1) barrier[j] = partial_barrier_UA(spec, s[j]);
  }
  auto event = [&](std::span<const double> w) {  // w[j] = walk after step j+1
    bool below = true;
    for (std::size_t j = 0; j < n && below; ++j) below = w[j] <= barrier[j];
    unsigned bits = 0;
    if (below) bits |= 1u << 3;
    if (w[n - 1] >= V) bits |= 1u << 4;
    return bits;
  };

  std::vector<SampleRecord> recs(cfg.samples);
  std::vector<unsigned> companion(cfg.samples, 0);
  std::vector<char> failed;
  const std::uint64_t companion_seed = derive_stream(cfg.seed, ~std::uint64_t{0});
  for_each_sample(cfg.samples, cfg.workers, failed, [&](std::size_t i) {
    SampleRecord& r = recs[i];
    r.index = i;
    r.seed = derive_stream(cfg.seed, i);
    std::vector<double> w(n);
    if (cfg.target == Target::gaussian) {
      Rng rng(r.seed);
      const GaussianWalk g = sample_gaussian_walk(var, rng);
      std::copy(g.partial.begin() + 1, g.partial.end(), w.begin());
    } else {
      // real parts only, so the h = 0 kernel applies step by step
      const RandomEulerProduct model(*table, r.seed);
      double acc_w = 0.0;
      for (std::size_t j = 0; j < n; ++j) w[j] = (acc_w += model_eval_range(model, step_ranges[j], 0.0));
      Rng rng(derive_stream(companion_seed, i));
      const GaussianWalk g = sample_gaussian_walk(var, rng);
      companion[i] = event(std::span<const double>(g.partial).subspan(1));
    }
    r.S_ttheta0 = w[n - 1];
    r.flags = event(w);
  });
  collect(out, recs, failed, true, false, false, false);

  auto freq = [&](auto&& get) {
    std::size_t hits = 0;
    for (const auto& r : out.records) hits += get(r) ? 1 : 0;
    const double m = static_cast<double>(out.records.size());
    const double p = static_cast<double>(hits) / m;
    return std::pair<double, double>(p, std::sqrt(p * (1 - p) / m));
  };
  constexpr unsigned both = (1u << 3) | (1u << 4);
  const auto [p_mc, se_mc] = freq([&](const SampleRecord& r) { return (*r.flags & both) == both; });
  const BallotResult dp = ballot_dp(barrier, 0.0, V, kPlusInf, var);

  out.summary["steps"] = n;
  out.summary["t_prime"] = t_prime;
  out.summary["t1"] = spec.t1;
  out.summary["V"] = V;
  out.summary["mc_probability"] = p_mc;
  out.summary["mc_se"] = se_mc;
  out.summary["dp_probability"] = dp.probability;
  out.summary["dp_error"] = dp.error;
  out.summary["asymptotic"] = ballot_asymptotic(cfg.A, V, spec.t1, t_prime, cfg.log_coef);
  out.summary["step_variances"] = var;
  if (cfg.target == Target::model) {
    std::size_t hits = 0;
    for (const auto& r : out.records) hits += (companion[r.index] & both) == both ? 1 : 0;
    const double m = static_cast<double>(out.records.size());
    const double pg = static_cast<double>(hits) / m;
    out.summary["gaussian_probability"] = pg;
    out.summary["gaussian_se"] = std::sqrt(pg * (1 - pg) / m);
    out.summary["relative_difference"] = pg > 0 ? std::fabs(p_mc - pg) / pg : kNaN;
  }
  return out;
}

RunResult run_experiment(const std::string& name, const ExperimentConfig& config) {
  if (name == "max") return run_max_experiment(config);
  if (name == "moment") return run_moment_experiment(config);
  if (name == "decouple") return run_decoupling_experiment(config);
  if (name == "clt") return run_clt_check(config);
  if (name == "ballot") return run_ballot_comparison(config);
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

}  // namespace mesozeta
