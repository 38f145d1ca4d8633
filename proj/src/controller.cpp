#include "aerialqp/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aerialqp {

namespace {

Eigen::Vector3d pd_law(const Eigen::Vector3d& x, const Eigen::Vector3d& xd, const Eigen::Vector3d& x_des,
                       const Eigen::Vector3d& xd_des, const Eigen::Vector3d& xdd_des, const Eigen::Matrix3d& Kp,
                       const Eigen::Matrix3d& Kv) {
  return xdd_des + Kv * (xd_des - xd) + Kp * (x_des - x);
}

// [Lambda_1 e3' R', Lambda_2, 0]: rotor thrusts as a linear function of u.
Eigen::MatrixXd rotor_projection(const Eigen::Matrix3d& R, const RotorGeometry& geom, int dofs) {
  const Eigen::Matrix4d Lambda = allocation_matrix(geom).inverse();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(kNumRotors, dofs);
  P.leftCols<3>() = Lambda.col(0) * (R * Eigen::Vector3d::UnitZ()).transpose();
  P.middleCols<3>(3) = Lambda.rightCols<3>();
  return P;
}

double box_margin(const Eigen::VectorXd& v, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i) m = std::min({m, hi[i] - v[i], v[i] - lo[i]});
  return m;
}

}  // namespace

ControllerState ControllerState::initialize(const SystemState& measured) {
  ControllerState c;
  c.nu_r = measured.nu;
  c.last_feasible_nudot = Eigen::VectorXd::Zero(measured.nu.size());
  c.saturation_flags.assign(kNumRotors + measured.nu.size() - 6, false);
  return c;
}

OuterLoopResult outer_loop(const SystemState& /*s*/, const TaskStack& stack, const TaskReference& ref,
                           const GainSet& gains, double mass, double gravity,
                           const std::optional<Eigen::Vector3d>& previous_thrust_dir) {
  OuterLoopResult out;
  const Eigen::Vector3d pB_acc = pd_law(stack.p_B(), stack.X_dot.segment<3>(0), ref.p_B_d, ref.p_B_d_dot,
                                        ref.p_B_d_ddot, gains.Kp_B, gains.Kv_B);
  const Eigen::Vector3d psi_acc = pd_law(stack.X_psi(), stack.X_dot.segment<3>(3), ref.X_psi_d, ref.X_psi_d_dot,
                                         ref.X_psi_d_ddot, gains.Kp_psi, gains.Kv_psi);
  const Eigen::Vector3d pE_acc = pd_law(stack.p_E_B(), stack.X_dot.segment<3>(6), ref.p_E_d, ref.p_E_d_dot,
                                        ref.p_E_d_ddot, gains.Kp_M, gains.Kv_M);

  const Eigen::Vector3d thrust = mass * (pB_acc + gravity * Eigen::Vector3d::UnitZ());
  if ((pB_acc + gravity * Eigen::Vector3d::UnitZ()).norm() < 1e-6) {
    if (!previous_thrust_dir) throw DegenerateThrust();
    out.X_t_d = *previous_thrust_dir;
    out.degenerate = true;
  } else {
    out.X_t_d = thrust.normalized();
  }
  const Eigen::Vector3d t_acc =
      -gains.lambda_v * stack.X_dot.segment<3>(9) + gains.lambda_p * (out.X_t_d - stack.X_t());

  out.Xddot_star << pB_acc, psi_acc, pE_acc, t_acc;
  return out;
}

JointAccelerationBounds joint_position_bounds(const Eigen::VectorXd& q, const Eigen::VectorXd& qdot,
                                              const std::vector<Link>& links, double horizon) {
  const auto n = static_cast<Eigen::Index>(links.size());
  const double T = horizon;
  JointAccelerationBounds b;
  b.lower.resize(n);
  b.upper.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const JointParams& j = links[static_cast<std::size_t>(i)].joint;
    const double qi = q[i];
    const double vi = qdot[i];
    double hi = 2.0 * (j.q_max - qi - vi * T) / (T * T);
    double lo = 2.0 * (j.q_min - qi - vi * T) / (T * T);

    // Braking rows engage only once the horizon predicts reaching the limit.
    const double d_up = j.q_max - qi;
    if (d_up <= 0.0) {
      hi = std::min(hi, 0.0);
    } else if (vi > 0.0 && qi + vi * T >= j.q_max) {
      hi = std::min(hi, -vi * vi / (2.0 * d_up));
    }
    const double d_lo = qi - j.q_min;
    if (d_lo <= 0.0) {
      lo = std::max(lo, 0.0);
    } else if (vi < 0.0 && qi + vi * T <= j.q_min) {
      lo = std::max(lo, vi * vi / (2.0 * d_lo));
    }
    if (lo > hi) throw EmptyInterval(static_cast<int>(i));
    b.lower[i] = lo;
    b.upper[i] = hi;
  }
  return b;
}

Eigen::MatrixXd integral_gain(const GainSet& gains, const Eigen::MatrixXd& M) {
  return gains.K_scale * M + gains.K_offset * Eigen::MatrixXd::Identity(M.rows(), M.cols());
}

Eigen::Vector4d rotor_thrusts(const Eigen::VectorXd& u, const Eigen::Matrix3d& R, const RotorGeometry& geom) {
  const double f_z = (R.transpose() * u.head<3>()).z();
  return wrench_to_rotors(f_z, u.segment<3>(3), geom);
}

WholeBodyQP build_qp(const ModelDescription& model, const DynamicsTerms& terms, const TaskStack& stack,
                     const Vector12d& Xddot_star, const GainSet& gains, const SystemState& s,
                     const Eigen::VectorXd& s_err, const std::optional<JointAccelerationBounds>& joint_bounds) {
  const int n = model.num_joints();
  const int d = model.dofs();
  WholeBodyQP out;
  out.K = integral_gain(gains, terms.M);
  const Eigen::MatrixXd L = terms.C + out.K;
  out.bias = terms.C * s.nu + terms.G + L * s_err;

  QPInstance& qp = out.qp;
  const Eigen::MatrixXd JW = stack.J_task.transpose() * gains.W1;
  qp.H = JW * stack.J_task + gains.W2;
  qp.H = 0.5 * (qp.H + qp.H.transpose()).eval();
  qp.g = JW * (stack.drift - Xddot_star) + gains.W2 * (gains.lambda_reg * s.nu);

  // Body-frame x/y force of u must vanish.
  const Eigen::Matrix<double, 2, 3> Sxy = s.R.transpose().topRows<2>();
  qp.A_eq = Sxy * terms.M.topRows(3);
  qp.b_eq = -Sxy * out.bias.head<3>();

  out.rotor_map = rotor_projection(s.R, model.rotors, d);
  const Eigen::MatrixXd PM = out.rotor_map * terms.M;
  const Eigen::Vector4d Ph = out.rotor_map * out.bias;
  const Eigen::MatrixXd TM = terms.M.bottomRows(n);
  const Eigen::VectorXd Th = out.bias.tail(n);

  const int joint_rows = joint_bounds ? 2 * n : 0;
  const int m = 2 * kNumRotors + 2 * n + joint_rows;
  qp.A_in = Eigen::MatrixXd::Zero(m, d);
  qp.b_in = Eigen::VectorXd::Zero(m);

  QPLayout& lay = out.layout;
  lay.num_joints = n;
  lay.rotor_max = 0;
  lay.rotor_min = kNumRotors;
  lay.torque_max = 2 * kNumRotors;
  lay.torque_min = 2 * kNumRotors + n;

  const double f_max = model.rotors.f_max;
  const double f_min = model.rotors.f_min;
  qp.A_in.middleRows(lay.rotor_max, kNumRotors) = PM;
  qp.b_in.segment(lay.rotor_max, kNumRotors) = Eigen::Vector4d::Constant(f_max) - Ph;
  qp.A_in.middleRows(lay.rotor_min, kNumRotors) = -PM;
  qp.b_in.segment(lay.rotor_min, kNumRotors) = Ph - Eigen::Vector4d::Constant(f_min);

  qp.A_in.middleRows(lay.torque_max, n) = TM;
  qp.b_in.segment(lay.torque_max, n) = model.tau_max() - Th;
  qp.A_in.middleRows(lay.torque_min, n) = -TM;
  qp.b_in.segment(lay.torque_min, n) = Th - model.tau_min();

  if (joint_bounds) {
    lay.joint_upper = 2 * kNumRotors + 2 * n;
    lay.joint_lower = lay.joint_upper + n;
    qp.A_in.block(lay.joint_upper, 6, n, n).setIdentity();
    qp.b_in.segment(lay.joint_upper, n) = joint_bounds->upper;
    qp.A_in.block(lay.joint_lower, 6, n, n) = -Eigen::MatrixXd::Identity(n, n);
    qp.b_in.segment(lay.joint_lower, n) = -joint_bounds->lower;
  }
  return out;
}

ControlStepResult control_step(const ModelDescription& model, const GainSet& gains, const ControllerConfig& config,
                               const SystemState& s, const TaskReference& ref, const ControllerState& ctrl,
                               double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("control_step: dt must be positive");
  const int n = model.num_joints();
  const int d = model.dofs();

  ControlStepResult result;
  ControlOutput& out = result.output;
  ControlDiagnostics& diag = out.diagnostics;
  ControllerState next = ctrl;

  const DynamicsTerms terms = dynamics_terms(model, s);
  const TaskStack stack = task_stack(model, s);

  const double mass = config.thrust_dir_mass == ThrustDirectionMass::kBase ? model.base.mass : model.total_mass();
  OuterLoopResult outer;
  try {
    outer = outer_loop(s, stack, ref, gains, mass, model.gravity, ctrl.last_thrust_dir);
  } catch (const DegenerateThrust&) {
    // No previous direction on the very first step: fall back to the current thrust axis.
    outer = outer_loop(s, stack, ref, gains, mass, model.gravity, stack.X_t());
  }
  diag.degenerate_thrust = outer.degenerate;
  diag.X_t_d = outer.X_t_d;
  next.last_thrust_dir = outer.X_t_d;

  const Eigen::VectorXd s_err = config.integral_enabled ? Eigen::VectorXd(ctrl.nu_r - s.nu)
                                                        : Eigen::VectorXd::Zero(d);
  const Eigen::VectorXd nu_r = config.integral_enabled ? ctrl.nu_r : s.nu;
  diag.norm_s = s_err.norm();

  std::optional<JointAccelerationBounds> bounds;
  const Eigen::VectorXd q = s.q;
  const Eigen::VectorXd qdot = s.joint_velocity();
  try {
    bounds = joint_position_bounds(q, qdot, model.links, config.joint_horizon);
  } catch (const EmptyInterval&) {
    try {
      bounds = joint_position_bounds(q, qdot, model.links, 2.0 * config.joint_horizon);
    } catch (const EmptyInterval&) {
      bounds.reset();
    }
  }

  WholeBodyQP wbqp = build_qp(model, terms, stack, outer.Xddot_star, gains, s, s_err, bounds);
  QPSolution sol = solve_qp(wbqp.qp, config.qp);
  int total_iters = sol.iterations;
  diag.first_qp_status = sol.status;
  if (!bounds) diag.fallback = FallbackLevel::kDroppedJointRows;
  if (sol.status != QPStatus::kOptimal && bounds) {
    wbqp = build_qp(model, terms, stack, outer.Xddot_star, gains, s, s_err, std::nullopt);
    sol = solve_qp(wbqp.qp, config.qp);
    total_iters += sol.iterations;
    diag.fallback = FallbackLevel::kDroppedJointRows;
  }
  diag.qp_status = sol.status;
  diag.qp_iterations = total_iters;
  diag.kkt_residual = sol.kkt_residual;

  const Eigen::VectorXd tau_min = model.tau_min();
  const Eigen::VectorXd tau_max = model.tau_max();
  std::fill(next.saturation_flags.begin(), next.saturation_flags.end(), false);
  next.saturation_flags.resize(static_cast<std::size_t>(kNumRotors + n), false);

  bool rotor_bound_active = false;
  if (sol.status == QPStatus::kOptimal) {
    diag.active_set = sol.active_set;
    out.nu_r_dot = sol.x;
    out.u = terms.M * sol.x + terms.C * nu_r + terms.G + wbqp.K * s_err;
    out.F = rotor_thrusts(out.u, s.R, model.rotors);
    out.tau_M = out.u.tail(n);
    next.last_feasible_nudot = sol.x;
    for (int row : sol.active_set) {
      const QPLayout& lay = wbqp.layout;
      if (lay.is_rotor_row(row)) {
        rotor_bound_active = true;
        next.saturation_flags[static_cast<std::size_t>(row % kNumRotors)] = true;
      } else if (row >= lay.torque_max && row < lay.torque_min + n) {
        next.saturation_flags[static_cast<std::size_t>(kNumRotors + (row - lay.torque_max) % n)] = true;
      }
    }
  } else {
    // Gravity hold: u = G projected onto the actuator box.
    diag.fallback = FallbackLevel::kGravityHold;
    out.nu_r_dot = Eigen::VectorXd::Zero(d);
    out.u = terms.G;
    out.F = rotor_thrusts(terms.G, s.R, model.rotors)
                .cwiseMax(model.rotors.f_min)
                .cwiseMin(model.rotors.f_max);
    out.tau_M = terms.G.tail(n).cwiseMax(tau_min).cwiseMin(tau_max);
  }

  diag.rotor_margin = box_margin(out.F, Eigen::Vector4d::Constant(model.rotors.f_min),
                                 Eigen::Vector4d::Constant(model.rotors.f_max));
  diag.torque_margin = box_margin(out.tau_M, tau_min, tau_max);
  diag.underactuation_residual = (s.R.transpose() * out.u.head<3>()).head<2>().norm();

  if (config.integral_enabled) {
    const bool freeze =
        config.anti_windup && (diag.fallback == FallbackLevel::kGravityHold || rotor_bound_active);
    if (!freeze) {
      next.nu_r = ctrl.nu_r + out.nu_r_dot * dt;
      diag.integrated = true;
    }
  } else {
    next.nu_r = s.nu;
  }

  result.state = std::move(next);
  return result;
}

}  // namespace aerialqp
