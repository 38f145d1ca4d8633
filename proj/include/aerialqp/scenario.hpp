#ifndef AERIALQP_SCENARIO_HPP_
#define AERIALQP_SCENARIO_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "aerialqp/controller.hpp"
#include "aerialqp/model.hpp"
#include "aerialqp/plant.hpp"
#include "aerialqp/reference.hpp"
#include "aerialqp/sensors.hpp"

namespace aerialqp {

inline constexpr int kScenarioSchemaVersion = 1;

struct InitialCondition {
  Eigen::Vector3d p_B = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  Eigen::VectorXd q;  // empty: all zeros
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string model_path;  // optional, resolved relative to the scenario file
  std::string gains_path;
  double duration = 30.0;
  double control_period = 0.005;
  int substeps = 5;
  double steady_state_start = 10.0;  // start of the steady-state metric window, s
  ControllerConfig controller;
  bool perturbation_enabled = false;
  PerturbationSpec perturbation;
  bool noise_enabled = false;
  NoiseSpec noise;
  InitialCondition initial;
  SetpointSchedule schedule;

  /// Throws ValidationError naming the offending field.
  void validate(int num_joints) const;
};

ScenarioConfig parse_scenario(const std::string& yaml_text);
/// Loads a scenario file; relative model/gains paths are resolved against the file's directory.
ScenarioConfig load_scenario(const std::string& path);

/// One record per control step.
struct LogRow {
  double t = 0.0;
  Eigen::Vector3d p_B, p_B_ref;
  double yaw = 0.0, yaw_ref = 0.0;
  Eigen::Vector3d p_E, p_E_ref;
  Eigen::VectorXd q;
  Eigen::Vector4d F;        // applied, after clipping
  Eigen::VectorXd tau;      // applied, after clipping
  Eigen::Vector4d F_cmd;
  Eigen::VectorXd tau_cmd;
  double norm_s = 0.0;
  QPStatus qp_status = QPStatus::kOptimal;
  QPStatus first_qp_status = QPStatus::kOptimal;
  int qp_iters = 0;
  int active_count = 0;
  int fallback = 0;
  double underactuation = 0.0;
  double thrust_angle = 0.0;  // angle between X_t and X_t_d, rad
  bool degenerate_thrust = false;
};

struct RunMetrics {
  Eigen::Vector3d rmse_p_B = Eigen::Vector3d::Zero();
  double mean_abs_yaw_error = 0.0;
  Eigen::Vector3d rmse_p_E = Eigen::Vector3d::Zero();
  Eigen::Vector3d ss_p_B = Eigen::Vector3d::Zero();  // max |error| over the steady-state window
  double ss_yaw = 0.0;
  Eigen::Vector3d ss_p_E = Eigen::Vector3d::Zero();
  int steps = 0;
  int optimal_steps = 0;       // steps whose full QP solved to optimality on the first attempt
  double feasibility_rate = 0.0;
  double mean_qp_iterations = 0.0;
  int max_qp_iterations = 0;
  int dropped_joint_rows = 0;
  int gravity_holds = 0;
  int degenerate_thrust = 0;
  int rotor_cmd_outside_box = 0;
  int torque_cmd_outside_box = 0;
  int joint_limit_violations = 0;
  double max_joint_limit_excess = 0.0;
  double max_underactuation = 0.0;  // over optimal steps
  double final_norm_s = 0.0;
  double final_thrust_angle = 0.0;
  bool bounded = true;
};

struct RunLog {
  std::string scenario;
  bool integral_enabled = true;
  std::uint64_t seed = 0;
  int num_joints = 0;
  std::vector<LogRow> rows;
  RunMetrics metrics;
  SystemState final_state;
};

/// Runs the closed loop: sensor -> controller at the control period, plant with
/// `substeps` RK4 steps per period under zero-order hold.
RunLog run_scenario(const ScenarioConfig& config, const ModelDescription& truth, const GainSet& gains);

Eigen::Vector3d rmse_components(const std::vector<Eigen::Vector3d>& errors);
double wrap_angle(double a);
RunMetrics compute_metrics(const std::vector<LogRow>& rows, const ModelDescription& truth, double steady_start);

void write_csv(std::ostream& out, const RunLog& log);
std::string summary_json(const RunLog& log);

/// Writes `contents` to path via a temporary sibling and rename.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace aerialqp

#endif  // AERIALQP_SCENARIO_HPP_
