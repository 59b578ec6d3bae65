#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace mesozeta {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---- statistics -------------------------------------------------------------

struct LinearFit {
  double slope = kNaN;
  double intercept = kNaN;
  double r2 = kNaN;
  std::size_t points = 0;
};

// Least squares of logp on x; empty weights means unweighted. R^2 is the
// weighted coefficient of determination. Needs two distinct x values.
LinearFit fit_loglinear(std::span<const double> x, std::span<const double> logp,
                        std::span<const double> weights = {});

struct TailEstimate {
  std::vector<double> y;
  std::vector<double> emp_p;        // fraction of values > y
  std::vector<double> se;           // binomial sqrt(p(1-p)/n)
  std::vector<double> predicted_g;  // y e^{-2y - y^2/t'}; NaN without t'
  std::size_t n = 0;
  LinearFit fit;  // log emp_p on y, weights (p/se)^2, over points with 0 < p < 1
};

// Throws std::invalid_argument for an empty sample.
TailEstimate estimate_tail(std::span<const double> values, std::span<const double> y_grid,
                           double t_prime = kNaN);

double predicted_tail_g(double y, double t_prime);

// sup |F_n - F| against a continuous reference CDF.
double ks_distance(std::span<const double> values, const std::function<double(double)>& cdf);
double standard_normal_cdf(double x);

// (1/width) * trapezoid rule for exp(2 v) on an evenly spaced grid.
double normalized_trapezoid_exp2(std::span<const double> v, double spacing, double width);

// ---- configuration ----------------------------------------------------------

enum class Target { zeta, model, gaussian_brw, gaussian };

std::string to_string(Target target);
Target target_from_string(const std::string& s);  // std::invalid_argument when unknown

struct ExperimentConfig {
  Target target = Target::model;
  std::optional<double> T;                   // zeta: heights tau uniform in [T, 2T]
  std::optional<std::uint64_t> prime_limit;  // model
  double theta = 0.0;
  std::optional<double> spacing;  // h-grid spacing; default 0.05 / log T
  std::size_t samples = 1;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string output;  // run directory

  std::size_t depth = 12;  // gaussian-brw
  std::size_t branching = 2;

  double y_min = 1.0;  // tail grid of the max experiment
  double y_max = 3.0;
  std::size_t y_points = 9;

  std::size_t steps = 10;  // ballot comparison
  double A = 1.0;
  double alpha = 0.5;
  double s_const = 1.0;
  double log_coef = 1.0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;

  // log T (log of the prime limit for the model target) and t = log log T.
  double log_T() const;
  double t() const;
  double t_prime() const { return t() * (1.0 + theta); }
  double t_theta() const { return -theta * t(); }
  double grid_spacing() const;
};

// Flat keys mirroring the command-line flags.
nlohmann::json config_to_json(const ExperimentConfig& config);
// Unknown keys and ill-typed values throw std::invalid_argument. Keys absent
// from `j` keep their value in `base`. Does not validate.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});

// ---- samples and runs -------------------------------------------------------

struct SampleRecord {
  std::size_t index = 0;
  double tau = kNaN;       // zeta target
  std::uint64_t seed = 0;  // other targets: the sample's substream seed
  double S_ttheta0 = kNaN;
  double max_centered = kNaN;
  double argmax_h = kNaN;
  double Z2 = kNaN;
  double decouple_max = kNaN;
  std::optional<unsigned> flags;  // EventFlags::bits of the shifted walk at argmax_h
};

// Exclusions above 0.1% of the samples.
class ExclusionError : public std::runtime_error {
 public:
  ExclusionError(const std::string& what, std::size_t first_index)
      : std::runtime_error(what), first_index_(first_index) {}
  std::size_t first_index() const { return first_index_; }

 private:
  std::size_t first_index_;
};

struct RunResult {
  std::string experiment;
  ExperimentConfig config;
  std::vector<SampleRecord> records;  // sorted by index, exclusions removed
  std::vector<std::size_t> excluded;
  std::optional<TailEstimate> tail;
  nlohmann::json summary;
};

// Max over the h-grid of the centered log-modulus; gaussian-brw uses the tree
// maximum with per-level variance (log b)/2.
RunResult run_max_experiment(const ExperimentConfig& config);
// Normalized second moment over the window, regressed on S_{t_theta}(0).
RunResult run_moment_experiment(const ExperimentConfig& config);
// max_h |S_{t_theta}(h) - S_{t_theta}(0)| and its log-tail fits against x and x^2.
RunResult run_decoupling_experiment(const ExperimentConfig& config);
// KS distance of standardized S_{t_theta}(0) from N(0,1).
RunResult run_clt_check(const ExperimentConfig& config);
// Barrier event frequency vs ballot_dp vs ballot_asymptotic.
RunResult run_ballot_comparison(const ExperimentConfig& config);

// Dispatch by name: max, moment, decouple, clt, ballot.
RunResult run_experiment(const std::string& name, const ExperimentConfig& config);

// A run directory that already holds a manifest.
class RunExistsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes manifest.json, samples.csv and (when a tail exists) tails.csv.
// Throws RunExistsError unless overwrite is set.
void write_run(const RunResult& result, const std::filesystem::path& dir,
               const std::string& start_time, const std::string& end_time, bool overwrite);

std::string samples_csv(const RunResult& result);
std::string tails_csv(const TailEstimate& tail);
std::string format_real(double x);  // 17 significant digits, locale-free

}  // namespace mesozeta
