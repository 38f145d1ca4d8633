#ifndef AERIALQP_CONTROLLER_HPP_
#define AERIALQP_CONTROLLER_HPP_

#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "aerialqp/dynamics.hpp"
#include "aerialqp/kinematics.hpp"
#include "aerialqp/model.hpp"
#include "aerialqp/qp_solver.hpp"

namespace aerialqp {

using Vector12d = Eigen::Matrix<double, 12, 1>;

/// Desired base position (world), yaw-direction vector X_psi_d = R_d' e1, and
/// end-effector position in the base frame, each with two derivatives.
struct TaskReference {
  Eigen::Vector3d p_B_d = Eigen::Vector3d::Zero();
  Eigen::Vector3d p_B_d_dot = Eigen::Vector3d::Zero();
  Eigen::Vector3d p_B_d_ddot = Eigen::Vector3d::Zero();
  Eigen::Vector3d X_psi_d = Eigen::Vector3d::UnitX();
  Eigen::Vector3d X_psi_d_dot = Eigen::Vector3d::Zero();
  Eigen::Vector3d X_psi_d_ddot = Eigen::Vector3d::Zero();
  Eigen::Vector3d p_E_d = Eigen::Vector3d::Zero();
  Eigen::Vector3d p_E_d_dot = Eigen::Vector3d::Zero();
  Eigen::Vector3d p_E_d_ddot = Eigen::Vector3d::Zero();
};

enum class ThrustDirectionMass { kBase, kTotal };

struct ControllerConfig {
  bool integral_enabled = true;
  bool anti_windup = true;  // freeze nu_r on fallback steps or while a rotor bound is active
  ThrustDirectionMass thrust_dir_mass = ThrustDirectionMass::kBase;
  double joint_horizon = 0.1;  // s
  QPSettings qp;
};

struct ControllerState {
  Eigen::VectorXd nu_r;
  Eigen::VectorXd last_feasible_nudot;
  std::vector<bool> saturation_flags;  // 4 rotors followed by n joint torques
  std::optional<Eigen::Vector3d> last_thrust_dir;

  static ControllerState initialize(const SystemState& measured);
};

enum class FallbackLevel { kNone = 0, kDroppedJointRows = 1, kGravityHold = 2 };

struct ControlDiagnostics {
  QPStatus qp_status = QPStatus::kOptimal;        // status of the QP whose solution was used
  QPStatus first_qp_status = QPStatus::kOptimal;  // status of the full QP before any retry
  int qp_iterations = 0;
  std::vector<int> active_set;
  double kkt_residual = 0.0;
  double rotor_margin = 0.0;   // min distance of commanded F to [F_min, F_max]; negative when violated
  double torque_margin = 0.0;
  double underactuation_residual = 0.0;  // |body x/y force of u|
  double norm_s = 0.0;
  FallbackLevel fallback = FallbackLevel::kNone;
  bool degenerate_thrust = false;
  bool integrated = false;
  Eigen::Vector3d X_t_d = Eigen::Vector3d::UnitZ();
};

struct ControlOutput {
  Eigen::Vector4d F = Eigen::Vector4d::Zero();
  Eigen::VectorXd tau_M;
  Eigen::VectorXd u;
  Eigen::VectorXd nu_r_dot;
  ControlDiagnostics diagnostics;
};

class DegenerateThrust : public std::runtime_error {
 public:
  DegenerateThrust() : std::runtime_error("desired thrust direction is undefined (free-fall command)") {}
};

class EmptyInterval : public std::runtime_error {
 public:
  explicit EmptyInterval(int joint)
      : std::runtime_error("joint " + std::to_string(joint) + ": empty acceleration interval"), joint_(joint) {}
  [[nodiscard]] int joint() const { return joint_; }

 private:
  int joint_;
};

struct OuterLoopResult {
  Vector12d Xddot_star = Vector12d::Zero();
  Eigen::Vector3d X_t_d = Eigen::Vector3d::UnitZ();
  bool degenerate = false;
};

/// Task-space PD laws for [p_B; X_psi; p_E^B] and the thrust-direction law.
/// When m (p_B_ddot* + g e3) vanishes the previous direction is reused if given,
/// otherwise DegenerateThrust is thrown.
OuterLoopResult outer_loop(const SystemState& s, const TaskStack& stack, const TaskReference& ref,
                           const GainSet& gains, double mass, double gravity,
                           const std::optional<Eigen::Vector3d>& previous_thrust_dir = std::nullopt);

struct JointAccelerationBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Per-joint q_ddot interval keeping q inside [q_min, q_max] over the horizon T.
/// Throws EmptyInterval when a joint's interval is empty.
JointAccelerationBounds joint_position_bounds(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                                              const std::vector<Link>& links, double horizon);

/// Row layout of the inequality block, in order.
struct QPLayout {
  int rotor_max = 0, rotor_min = 0;
  int torque_max = 0, torque_min = 0;
  int joint_upper = -1, joint_lower = -1;  // -1 when joint rows are omitted
  int num_joints = 0;

  [[nodiscard]] bool is_rotor_row(int row) const { return row >= rotor_max && row < torque_max; }
};

struct WholeBodyQP {
  QPInstance qp;
  QPLayout layout;
  Eigen::VectorXd bias;        // C nu + G + L s, so that u = M nu_dot + bias
  Eigen::MatrixXd rotor_map;   // F = rotor_map * u
  Eigen::MatrixXd K;           // integral gain
};

WholeBodyQP build_qp(const ModelDescription& model, const DynamicsTerms& terms, const TaskStack& stack,
                     const Vector12d& Xddot_star, const GainSet& gains, const SystemState& s,
                     const Eigen::VectorXd& s_err, const std::optional<JointAccelerationBounds>& joint_bounds);

/// Integral gain K = K_scale M + K_offset I.
Eigen::MatrixXd integral_gain(const GainSet& gains, const Eigen::MatrixXd& M);

/// Rotor thrusts and joint torques realizing a generalized input u (no clipping).
Eigen::Vector4d rotor_thrusts(const Eigen::VectorXd& u, const Eigen::Matrix3d& R, const RotorGeometry& geom);

struct ControlStepResult {
  ControlOutput output;
  ControllerState state;
};

/// One control period: dynamics -> task stack -> outer loop -> QP -> inverse dynamics with the
/// passivity-based integral term -> rotor allocation, then nu_r <- nu_r + nu_r_dot dt.
ControlStepResult control_step(const ModelDescription& model, const GainSet& gains, const ControllerConfig& config,
                               const SystemState& s, const TaskReference& ref, const ControllerState& ctrl,
                               double dt);

}  // namespace aerialqp

#endif  // AERIALQP_CONTROLLER_HPP_
