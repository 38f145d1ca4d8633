#include "aerialqp/kinematics.hpp"

#include <cmath>

namespace aerialqp {

SystemState SystemState::at_rest(int num_joints) {
  SystemState s;
  s.q = Eigen::VectorXd::Zero(num_joints);
  s.nu = Eigen::VectorXd::Zero(6 + num_joints);
  return s;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d S;
  S << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return S;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& phi) {
  const double theta2 = phi.squaredNorm();
  const Eigen::Matrix3d S = skew(phi);
  double a, b;
  if (theta2 < 1e-12) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Eigen::Matrix3d::Identity() + a * S + b * S * S;
}

Eigen::Matrix3d so3_right_jacobian_inverse(const Eigen::Vector3d& phi) {
  const double theta2 = phi.squaredNorm();
  const Eigen::Matrix3d S = skew(phi);
  double c;
  if (theta2 < 1e-8) {
    c = 1.0 / 12.0 + theta2 / 720.0;
  } else {
    const double theta = std::sqrt(theta2);
    c = 1.0 / theta2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Eigen::Matrix3d::Identity() + 0.5 * S + c * S * S;
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& R) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  const Eigen::Matrix3d& V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) = -U.col(2);
  return U * V.transpose();
}

double yaw_of(const Eigen::Matrix3d& R) { return std::atan2(R(1, 0), R(0, 0)); }

namespace {

// Chain quantities in the base frame for a given (q, q_dot).
struct Chain {
  std::vector<Eigen::Vector3d> origin;      // joint/link frame origin
  std::vector<Eigen::Vector3d> origin_dot;
  std::vector<Eigen::Matrix3d> rot;         // link frame orientation
  std::vector<Eigen::Vector3d> axis;        // joint axis
  std::vector<Eigen::Vector3d> axis_dot;
  std::vector<Eigen::Vector3d> omega;       // link angular velocity relative to the base
};

Chain compute_chain(const ModelDescription& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) {
  const int n = model.num_joints();
  Chain c;
  c.origin.resize(n);
  c.origin_dot.resize(n);
  c.rot.resize(n);
  c.axis.resize(n);
  c.axis_dot.resize(n);
  c.omega.resize(n);

  Eigen::Vector3d parent_origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d parent_origin_dot = Eigen::Vector3d::Zero();
  Eigen::Matrix3d parent_rot = Eigen::Matrix3d::Identity();
  Eigen::Vector3d parent_omega = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) {
    const JointParams& j = model.links[static_cast<std::size_t>(i)].joint;
    const Eigen::Matrix3d joint_rot = parent_rot * j.origin_rotation;
    c.origin[i] = parent_origin + parent_rot * j.origin_translation;
    c.origin_dot[i] = parent_origin_dot + parent_omega.cross(c.origin[i] - parent_origin);
    c.axis[i] = joint_rot * j.axis;
    c.axis_dot[i] = parent_omega.cross(c.axis[i]);
    c.rot[i] = joint_rot * Eigen::AngleAxisd(q[i], j.axis).toRotationMatrix();
    c.omega[i] = parent_omega + c.axis[i] * qdot[i];

    parent_origin = c.origin[i];
    parent_origin_dot = c.origin_dot[i];
    parent_rot = c.rot[i];
    parent_omega = c.omega[i];
  }
  return c;
}

// Base-frame translational Jacobian (and its derivative) of a point rigidly attached to link k.
void point_jacobian(const Chain& c, int k, const Eigen::Vector3d& point, const Eigen::Vector3d& point_dot,
                    int n, Eigen::MatrixXd& J, Eigen::MatrixXd& J_dot) {
  J.setZero(3, n);
  J_dot.setZero(3, n);
  for (int j = 0; j <= k; ++j) {
    J.col(j) = c.axis[j].cross(point - c.origin[j]);
    J_dot.col(j) = c.axis_dot[j].cross(point - c.origin[j]) + c.axis[j].cross(point_dot - c.origin_dot[j]);
  }
}

}  // namespace

std::vector<BodyKinematics> forward_kinematics(const ModelDescription& model, const SystemState& s) {
  const int n = model.num_joints();
  const Chain c = compute_chain(model, s.q, Eigen::VectorXd::Zero(n));
  std::vector<BodyKinematics> bodies(static_cast<std::size_t>(n) + 1);
  bodies[0].p_ic = s.p_B + s.R * model.base.com_offset;
  bodies[0].R_i = s.R;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d com_B = c.origin[i] + c.rot[i] * model.links[static_cast<std::size_t>(i)].body.com_offset;
    bodies[static_cast<std::size_t>(i) + 1].p_ic = s.p_B + s.R * com_B;
    bodies[static_cast<std::size_t>(i) + 1].R_i = s.R * c.rot[i];
  }
  return bodies;
}

std::vector<BodyKinematics> body_jacobians(const ModelDescription& model, const SystemState& s) {
  const int n = model.num_joints();
  const int d = 6 + n;
  const Eigen::VectorXd qdot = s.joint_velocity();
  const Eigen::Vector3d omega_B = s.base_angular_velocity();
  const Eigen::Matrix3d& R = s.R;
  const Eigen::Matrix3d R_Sw = R * skew(omega_B);  // R_dot
  const Chain c = compute_chain(model, s.q, qdot);

  std::vector<BodyKinematics> bodies(static_cast<std::size_t>(n) + 1);

  {
    BodyKinematics& b = bodies[0];
    const Eigen::Vector3d& com = model.base.com_offset;
    b.p_ic = s.p_B + R * com;
    b.R_i = R;
    b.Jv = Eigen::MatrixXd::Zero(3, d);
    b.Jw = Eigen::MatrixXd::Zero(3, d);
    b.Jv_dot = Eigen::MatrixXd::Zero(3, d);
    b.Jw_dot = Eigen::MatrixXd::Zero(3, d);
    b.Jv.leftCols<3>().setIdentity();
    b.Jv.block<3, 3>(0, 3) = -R * skew(com);
    b.Jw.block<3, 3>(0, 3).setIdentity();
    b.Jv_dot.block<3, 3>(0, 3) = -R_Sw * skew(com);
  }

  Eigen::MatrixXd Jvb, Jvb_dot;
  for (int i = 0; i < n; ++i) {
    BodyKinematics& b = bodies[static_cast<std::size_t>(i) + 1];
    const Eigen::Matrix3d& Rb = c.rot[i];
    const Eigen::Vector3d com_B = c.origin[i] + Rb * model.links[static_cast<std::size_t>(i)].body.com_offset;
    const Eigen::Vector3d com_B_dot = c.origin_dot[i] + c.omega[i].cross(com_B - c.origin[i]);
    point_jacobian(c, i, com_B, com_B_dot, n, Jvb, Jvb_dot);

    Eigen::MatrixXd Jwb = Eigen::MatrixXd::Zero(3, n);
    Eigen::MatrixXd Jwb_dot = Eigen::MatrixXd::Zero(3, n);
    for (int j = 0; j <= i; ++j) {
      Jwb.col(j) = c.axis[j];
      Jwb_dot.col(j) = c.axis_dot[j];
    }

    b.p_ic = s.p_B + R * com_B;
    b.R_i = R * Rb;
    b.Jv = Eigen::MatrixXd::Zero(3, d);
    b.Jw = Eigen::MatrixXd::Zero(3, d);
    b.Jv_dot = Eigen::MatrixXd::Zero(3, d);
    b.Jw_dot = Eigen::MatrixXd::Zero(3, d);

    b.Jv.leftCols<3>().setIdentity();
    b.Jv.block<3, 3>(0, 3) = -R * skew(com_B);
    b.Jv.rightCols(n) = R * Jvb;
    b.Jw.block<3, 3>(0, 3) = Rb.transpose();
    b.Jw.rightCols(n) = Rb.transpose() * Jwb;

    const Eigen::Matrix3d RbT_SOmega = Rb.transpose() * skew(c.omega[i]);
    b.Jv_dot.block<3, 3>(0, 3) = -R_Sw * skew(com_B) - R * skew(com_B_dot);
    b.Jv_dot.rightCols(n) = R_Sw * Jvb + R * Jvb_dot;
    b.Jw_dot.block<3, 3>(0, 3) = -RbT_SOmega;
    b.Jw_dot.rightCols(n) = -RbT_SOmega * Jwb + Rb.transpose() * Jwb_dot;
  }

  for (auto& b : bodies) {
    b.Jv_dot_nu = b.Jv_dot * s.nu;
    b.Jw_dot_nu = b.Jw_dot * s.nu;
  }
  return bodies;
}

EndEffectorKinematics end_effector(const ModelDescription& model, const Eigen::VectorXd& q,
                                   const Eigen::VectorXd& qdot) {
  const int n = model.num_joints();
  const Chain c = compute_chain(model, q, qdot);
  EndEffectorKinematics ee;
  ee.p_E_B = c.origin[n - 1] + c.rot[n - 1] * model.tool_offset;
  const Eigen::Vector3d p_dot = c.origin_dot[n - 1] + c.omega[n - 1].cross(ee.p_E_B - c.origin[n - 1]);
  Eigen::MatrixXd J_dot;
  point_jacobian(c, n - 1, ee.p_E_B, p_dot, n, ee.J_E_B, J_dot);
  ee.J_E_B_dot_qdot = J_dot * qdot;
  return ee;
}

TaskStack task_stack(const ModelDescription& model, const SystemState& s) {
  const int n = model.num_joints();
  const int d = 6 + n;
  const Eigen::Vector3d e1 = Eigen::Vector3d::UnitX();
  const Eigen::Vector3d e3 = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d omega_B = s.base_angular_velocity();
  const Eigen::Matrix3d Sw2 = skew(omega_B) * skew(omega_B);
  const EndEffectorKinematics ee = end_effector(model, s.q, s.joint_velocity());

  TaskStack t;
  const Eigen::Vector3d X_psi = s.R.transpose() * e1;
  const Eigen::Vector3d X_t = s.R * e3;

  t.J_task = Eigen::MatrixXd::Zero(kTaskDim, d);
  t.J_task.block<3, 3>(0, 0).setIdentity();
  t.J_task.block<3, 3>(3, 3) = skew(X_psi);
  t.J_task.block(6, 6, 3, n) = ee.J_E_B;
  t.J_task.block<3, 3>(9, 3) = -s.R * skew(e3);

  t.drift.segment<3>(0).setZero();
  t.drift.segment<3>(3) = Sw2 * X_psi;
  t.drift.segment<3>(6) = ee.J_E_B_dot_qdot;
  t.drift.segment<3>(9) = s.R * Sw2 * e3;

  t.X << s.p_B, X_psi, ee.p_E_B, X_t;
  t.X_dot = t.J_task * s.nu;
  return t;
}

}  // namespace aerialqp
