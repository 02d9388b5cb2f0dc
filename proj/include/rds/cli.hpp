#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rds/model.hpp"

namespace rds {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
  std::string subcommand;
  /// Set (with subcommand "help") when --help was asked for.
  std::string help;

  // map descriptor
  std::string map = "standard-circle";
  std::string noise = "uniform";
  /// Sweep parameter (c for the affine family); family default unless a_given.
  double a = 0.0;
  bool a_given = false;
  double eps = 0.0;
  double sigma = 0.0;
  double lambda = 0.5;
  double lower = 0.0;
  double upper = 1.0;

  // numerics
  std::size_t grid = 2048;
  std::size_t quadrature = 5;
  std::size_t k = 8;
  double a_min = 0.0;
  double a_max = 0.0;
  std::size_t steps = 101;
  double x = 0.5;
  double x0 = 0.0;
  std::vector<Interval> window;
  std::string method = "setvalued";
  std::size_t mc = 0;
  std::string start = "uniform";
  std::size_t max_steps = 10000000;
  std::size_t n_iter = 100000;
  std::uint64_t seed = 1;
  std::size_t k_max = 3;
  std::size_t l_max = 8;
  double resolution = 1e-6;
  bool detectors = true;
  std::string kernel = "map";
  double probe_x = 0.3;
  std::size_t mu_points = 201;

  // outputs
  std::string out;
  std::string events;
  std::string manifest;
  std::string plot;

  /// Every option as given or defaulted, for the manifest.
  std::vector<std::pair<std::string, std::string>> echo;
};

/// CLI11 front end: `rds <subcommand> [--key value ...] [--config file]`.
/// The file holds flat `key = value` lines (keys are the flag names) with `#`
/// comments; flags override it. Throws Error(UsageError) on any problem.
RunConfig parse_config(const std::vector<std::string>& args);

/// Descriptor of the map at parameter a.
FamilySpec family_of(const RunConfig& config, double a);
/// make_map at the configured a; model errors come back as UsageError.
RandomMap1D map_of(const RunConfig& config);

/// Parses "lo:hi[,lo:hi...]".
std::vector<Interval> parse_window(const std::string& text);

/// 17 significant digits, `.` decimal.
std::string csv_real(double v);
/// RFC-4180 quoting when the field holds a comma, quote or line break.
std::string csv_field(const std::string& s);

struct RunManifest {
  std::vector<std::pair<std::string, std::string>> config;
  std::string version = kVersion;
  double wall_seconds = 0.0;
  std::vector<std::pair<std::string, double>> timings;
  std::vector<std::string> warnings;
  /// Scalar results worth keeping next to the CSVs.
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> outputs;
  std::string error;

  std::string to_json() const;
};

/// Runs one subcommand, writes its artifacts and the manifest. Returns the
/// exit status (0 ok, 1 module error); the manifest is written either way.
int run(const RunConfig& config, RunManifest& manifest, std::ostream& err);

/// argv front end: usage errors exit 2, module errors exit 1.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rds
