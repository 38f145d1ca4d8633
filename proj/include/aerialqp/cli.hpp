#ifndef AERIALQP_CLI_HPP_
#define AERIALQP_CLI_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aerialqp/model.hpp"

namespace aerialqp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPropertyFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitFallback = 3;

struct RunOptions {
  std::string model_path;     // empty: taken from the scenario file
  std::string gains_path;     // empty: taken from the scenario file
  std::string scenario_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<bool> integral;
  std::optional<double> duration;
};

/// Runs one scenario and writes <out>/<name>.csv and <out>/<name>_summary.json.
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);

/// Runs the scenario with the integral term on and off and writes both records plus
/// <out>/<name>_ablation.json; prints a comparison table.
int cmd_ablate(const RunOptions& opts, std::ostream& out, std::ostream& err);

/// Checks the dynamics properties of a model file and prints one line per property.
int cmd_validate(const std::string& model_path, std::ostream& out, std::ostream& err);

struct PropertyResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;
  double threshold = 0.0;
};

/// Mass-matrix symmetry and definiteness, M_dot - 2C skew-symmetry, unactuated energy drift and
/// inverse/forward round trip, evaluated on seeded random states.
std::vector<PropertyResult> dynamics_property_suite(const ModelDescription& model, std::uint64_t seed = 1,
                                                    int samples = 200);

}  // namespace aerialqp

#endif  // AERIALQP_CLI_HPP_
