#ifndef AERIALQP_MODEL_HPP_
#define AERIALQP_MODEL_HPP_

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace aerialqp {

inline constexpr int kNumRotors = 4;
inline constexpr int kTaskDim = 12;
inline constexpr int kModelSchemaVersion = 1;

/// Raised when a configuration document cannot be read or does not follow the schema.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a parsed value violates a model or gain invariant. `field()` names the offender.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& detail)
      : std::runtime_error(field + ": " + detail), field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct BodyParams {
  double mass = 0.0;
  Eigen::Vector3d com_offset = Eigen::Vector3d::Zero();  // CoM in the body's own frame
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();     // about the CoM, body frame
};

/// Revolute joint connecting a link to its parent (the base for link 0).
/// The child frame is parent * Trans(origin_translation) * origin_rotation * Rot(axis, q).
/// `axis` is expressed in the joint frame, i.e. the parent frame after the origin transform.
struct JointParams {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d origin_translation = Eigen::Vector3d::Zero();
  Eigen::Matrix3d origin_rotation = Eigen::Matrix3d::Identity();
  double q_min = 0.0;
  double q_max = 0.0;
  double qd_max = 0.0;
  double tau_min = 0.0;
  double tau_max = 0.0;
  double viscous_damping = 0.0;  // N·m/(rad/s); only the plant integrates it
};

struct Link {
  std::string name;
  BodyParams body;
  JointParams joint;
};

/// Cross ("X") quadrotor rotor layout. Rotor i sits at angle 45° + 90°·i in the base x-y plane.
struct RotorGeometry {
  double arm_length = 0.17;
  double yaw_torque_coefficient = 0.016;
  std::array<int, kNumRotors> spin_signs{1, -1, 1, -1};
  double f_min = 0.0;
  double f_max = 15.0;
};

struct ModelDescription {
  BodyParams base;
  std::vector<Link> links;
  RotorGeometry rotors;
  Eigen::Vector3d tool_offset = Eigen::Vector3d::Zero();  // end-effector origin in the last link frame
  double gravity = 9.81;

  [[nodiscard]] int num_joints() const { return static_cast<int>(links.size()); }
  [[nodiscard]] int dofs() const { return 6 + num_joints(); }
  [[nodiscard]] double total_mass() const;
  [[nodiscard]] Eigen::VectorXd q_min() const;
  [[nodiscard]] Eigen::VectorXd q_max() const;
  [[nodiscard]] Eigen::VectorXd tau_min() const;
  [[nodiscard]] Eigen::VectorXd tau_max() const;
  [[nodiscard]] Eigen::VectorXd joint_damping() const;
};

struct GainSet {
  Eigen::Matrix3d Kp_B, Kv_B;
  Eigen::Matrix3d Kp_psi, Kv_psi;
  Eigen::Matrix3d Kp_M, Kv_M;
  Eigen::Matrix3d lambda_p, lambda_v;
  Eigen::MatrixXd W1;          // 12 x 12
  Eigen::MatrixXd W2;          // (6+n) x (6+n)
  Eigen::MatrixXd lambda_reg;  // (6+n) x (6+n), diagonal
  double K_scale = 10.0;
  double K_offset = 0.001;
};

// Throws ValidationError naming the first offending field.
void validate_body(const BodyParams& body, const std::string& prefix);
void validate_model(const ModelDescription& model);
void validate_gains(const GainSet& gains, int num_joints);

ModelDescription parse_model(const std::string& yaml_text);
ModelDescription load_model(const std::string& path);
std::string serialize_model(const ModelDescription& model);

GainSet parse_gains(const std::string& yaml_text);
GainSet load_gains(const std::string& path);

/// Controller gains and weights of the reference aerial-manipulator setup, sized for n joints.
GainSet reference_gains(int num_joints);

/// 4x4 map from rotor thrusts to [collective thrust; body torques].
Eigen::Matrix4d allocation_matrix(const RotorGeometry& geom);

}  // namespace aerialqp

#endif  // AERIALQP_MODEL_HPP_
