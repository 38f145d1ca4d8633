#ifndef AERIALQP_KINEMATICS_HPP_
#define AERIALQP_KINEMATICS_HPP_

#include <vector>

#include <Eigen/Dense>

#include "aerialqp/model.hpp"

namespace aerialqp {

/// Floating-base configuration and generalized velocity nu = [p_B_dot (world); omega_B (body); q_M_dot].
struct SystemState {
  Eigen::Vector3d p_B = Eigen::Vector3d::Zero();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::VectorXd q;
  Eigen::VectorXd nu;

  static SystemState at_rest(int num_joints);
  [[nodiscard]] Eigen::Vector3d base_velocity() const { return nu.head<3>(); }
  [[nodiscard]] Eigen::Vector3d base_angular_velocity() const { return nu.segment<3>(3); }
  [[nodiscard]] Eigen::VectorXd joint_velocity() const { return nu.tail(nu.size() - 6); }
};

/// Pose and Jacobians of one rigid body's CoM. Body 0 is the base; body i >= 1 is link i.
/// Jv maps nu to the world-frame CoM velocity, Jw to the angular velocity in the body's own frame.
struct BodyKinematics {
  Eigen::Vector3d p_ic;
  Eigen::Matrix3d R_i;
  Eigen::MatrixXd Jv, Jw;
  Eigen::MatrixXd Jv_dot, Jw_dot;  // time derivatives along the current nu
  Eigen::Vector3d Jv_dot_nu = Eigen::Vector3d::Zero();
  Eigen::Vector3d Jw_dot_nu = Eigen::Vector3d::Zero();
};

/// End-effector point in the base frame with its joint-space Jacobian and drift.
struct EndEffectorKinematics {
  Eigen::Vector3d p_E_B;
  Eigen::MatrixXd J_E_B;  // 3 x n
  Eigen::Vector3d J_E_B_dot_qdot = Eigen::Vector3d::Zero();
};

/// 12-row task stack [p_B; X_psi; p_E^B; X_t] with X_ddot = J_task * nu_dot + drift.
struct TaskStack {
  Eigen::MatrixXd J_task;
  Eigen::Matrix<double, 12, 1> drift;
  Eigen::Matrix<double, 12, 1> X;
  Eigen::Matrix<double, 12, 1> X_dot;

  [[nodiscard]] Eigen::Vector3d p_B() const { return X.segment<3>(0); }
  [[nodiscard]] Eigen::Vector3d X_psi() const { return X.segment<3>(3); }
  [[nodiscard]] Eigen::Vector3d p_E_B() const { return X.segment<3>(6); }
  [[nodiscard]] Eigen::Vector3d X_t() const { return X.segment<3>(9); }
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);
/// Rodrigues' formula: exp(S(phi)).
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi);
/// Inverse of the right Jacobian of SO(3): phi_dot = J_r^{-1}(phi) * omega for R = R0 * exp(S(phi)).
Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& phi);
/// Nearest rotation matrix (polar factor).
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& R);
/// Heading of the base x axis in the world x-y plane.
double yaw_of(const Eigen::Matrix3d& R);

std::vector<BodyKinematics> forward_kinematics(const ModelDescription& model, const SystemState& s);
std::vector<BodyKinematics> body_jacobians(const ModelDescription& model, const SystemState& s);
EndEffectorKinematics end_effector(const ModelDescription& model, const Eigen::VectorXd& q,
                                   const Eigen::VectorXd& qdot);
TaskStack task_stack(const ModelDescription& model, const SystemState& s);

}  // namespace aerialqp

#endif  // AERIALQP_KINEMATICS_HPP_
