#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mesozeta/experiments.hpp"

namespace mesozeta {

// Bad command line or config file; exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CliInvocation {
  std::string subcommand;  // sieve, zeta, sample-model, max, moment, decouple, clt, ballot, report
  ExperimentConfig config;
  std::optional<std::string> config_file;
  bool overwrite = false;
  bool help = false;  // --help was given; help_text holds the page
  std::string help_text;

  std::string run_dir;  // report

  std::uint64_t limit = 0;  // sieve
  std::string cache;

  double t = 0.0;  // zeta
  double sigma = 0.5;
  int terms = 4;
  std::string method = "auto";

  double k = std::numeric_limits<double>::infinity();  // sample-model
  double h = 0.0;
  std::uint64_t index = 0;
};

// args excludes the program name. Experiment flags are applied on top of the
// config file (if any) and the result is validated. Throws UsageError.
CliInvocation parse_args(const std::vector<std::string>& args);

// Runs the invocation. Data goes to `out`, progress and errors to `err`.
// Returns 0 on success, 1 on runtime failure, 2 on usage error.
int execute(const CliInvocation& invocation, std::ostream& out, std::ostream& err);

// parse_args + execute with the exit-code contract.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mesozeta
