#pragma once
// Batch front-end: configuration, experiment dispatch and the JSON report.

#include <cstdint>
#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

#include "evlab/cli/json.hpp"
#include "evlab/simlab.hpp"

namespace evlab::cli {

inline constexpr const char* kVersion = "0.3.0";

struct RunConfig {
  std::string command;   // validate ville growth replay calibrate compress glr
  std::string scenario;  // replay: two-batch p-hacking glr-inflation two-ones
  std::string model = "bernoulli:0.5";
  std::string constructor = "constant";
  std::string rule = "fixed";  // validate: fixed | crossing
  simlab::SimConfig sim;
  std::string input;
  std::string format;  // csv | jsonl; empty picks by extension
  std::string out;
  bool table = false;
  std::string external_compressor;
  std::string compressor_mode = "count";
  std::string calibrator = "mixture";  // mixture | power:kappa
  std::string glr_family = "gaussian:1";
  std::string null_set = "0";       // lo..hi or a comma-separated grid
  std::string alt_set = "-10..10";
  // replay parameters
  std::size_t max_n = 1000;
  std::size_t n1 = 50;
  std::size_t n2 = 30;
  double promising_upper = 0.1;
  bool never_continue = false;
  double sigma = 1.0;
  double alt_theta = 0.7;

  Json to_json() const;
  /// Overlays the keys present in `j` on this config. Unknown keys and values
  /// of the wrong type are ConfigErrors naming the key.
  void merge_json(const Json& j);
  /// ConfigError naming the offending field.
  void validate() const;
};

/// Reads a config file: either a config object or a full report, in which
/// case its "config" member is used.
Json load_config_file(const std::string& path);

/// Defaults, then the --config file, then flags. Throws ConfigError on bad
/// flags. Returns false when --help or --version was handled.
bool parse_command_line(int argc, const char* const* argv, RunConfig& config, std::ostream& out);

/// Runs the experiment and returns {config, results, version, wall_time}.
Json run(const RunConfig& config);

/// One CSV row per result object: name,estimate,std_error,reps,seed plus any
/// other scalar fields in sorted order.
std::string results_table(const Json& results);

/// Full program: parse, run, write. Exit codes: 0 ok, 1 unexpected failure,
/// 2 configuration, 3 data, 4 numerical.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Exit status for an exception escaping a run.
int exit_code(std::exception_ptr error) noexcept;

}  // namespace evlab::cli
