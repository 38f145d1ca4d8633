#include "aerialqp/plant.hpp"

#include <stdexcept>

#include "aerialqp/dynamics.hpp"

namespace aerialqp {

namespace {

struct Stage {
  Eigen::Vector3d p_dot;
  Eigen::Vector3d xi_dot;
  Eigen::VectorXd q_dot;
  Eigen::VectorXd nu_dot;
};

// Local chart: R = R0 exp(xi).
Stage evaluate(const ModelDescription& plant, const SystemState& base, const Eigen::Vector3d& p,
               const Eigen::Vector3d& xi, const Eigen::VectorXd& q, const Eigen::VectorXd& nu,
               const AppliedInput& in, const Eigen::VectorXd& friction) {
  SystemState s;
  s.p_B = p;
  s.R = base.R * so3_exp(xi);
  s.q = q;
  s.nu = nu;
  GeneralizedInput u;
  u.w_B = rotors_to_wrench(in.F, s.R, plant.rotors);
  u.tau_M = in.tau_M;

  Stage k;
  k.p_dot = nu.head<3>();
  k.xi_dot = so3_right_jacobian_inverse(xi) * nu.segment<3>(3);
  k.q_dot = nu.tail(nu.size() - 6);
  k.nu_dot = forward_dynamics(plant, s, u, friction);
  return k;
}

}  // namespace

AppliedInput clip_input(const ModelDescription& plant, const Eigen::Vector4d& F, const Eigen::VectorXd& tau_M) {
  AppliedInput in;
  in.F = F.cwiseMax(plant.rotors.f_min).cwiseMin(plant.rotors.f_max);
  in.tau_M = tau_M.cwiseMax(plant.tau_min()).cwiseMin(plant.tau_max());
  return in;
}

SystemState plant_step(const ModelDescription& plant, const SystemState& s, const Eigen::Vector4d& F,
                       const Eigen::VectorXd& tau_M, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("plant_step: dt must be positive");
  const AppliedInput in = clip_input(plant, F, tau_M);
  const Eigen::VectorXd friction = plant.joint_damping();
  const Eigen::Vector3d xi0 = Eigen::Vector3d::Zero();

  const Stage k1 = evaluate(plant, s, s.p_B, xi0, s.q, s.nu, in, friction);
  const Stage k2 = evaluate(plant, s, s.p_B + 0.5 * dt * k1.p_dot, 0.5 * dt * k1.xi_dot, s.q + 0.5 * dt * k1.q_dot,
                            s.nu + 0.5 * dt * k1.nu_dot, in, friction);
  const Stage k3 = evaluate(plant, s, s.p_B + 0.5 * dt * k2.p_dot, 0.5 * dt * k2.xi_dot, s.q + 0.5 * dt * k2.q_dot,
                            s.nu + 0.5 * dt * k2.nu_dot, in, friction);
  const Stage k4 = evaluate(plant, s, s.p_B + dt * k3.p_dot, dt * k3.xi_dot, s.q + dt * k3.q_dot,
                            s.nu + dt * k3.nu_dot, in, friction);

  const double w = dt / 6.0;
  SystemState next;
  next.p_B = s.p_B + w * (k1.p_dot + 2.0 * k2.p_dot + 2.0 * k3.p_dot + k4.p_dot);
  const Eigen::Vector3d xi = w * (k1.xi_dot + 2.0 * k2.xi_dot + 2.0 * k3.xi_dot + k4.xi_dot);
  next.R = orthonormalize(s.R * so3_exp(xi));
  next.q = s.q + w * (k1.q_dot + 2.0 * k2.q_dot + 2.0 * k3.q_dot + k4.q_dot);
  next.nu = s.nu + w * (k1.nu_dot + 2.0 * k2.nu_dot + 2.0 * k3.nu_dot + k4.nu_dot);
  return next;
}

std::pair<ModelDescription, ModelDescription> apply_perturbations(const ModelDescription& truth,
                                                                  const PerturbationSpec& p) {
  if (!(p.link_mass_scale > 0.0)) throw std::invalid_argument("perturbation.link_mass_scale must be positive");
  ModelDescription plant = truth;
  for (Link& l : plant.links) l.joint.viscous_damping = p.joint_friction;

  ModelDescription ctrl = truth;
  for (Link& l : ctrl.links) {
    l.body.mass *= p.link_mass_scale;
    if (p.zero_inertia_products) l.body.inertia = Eigen::Matrix3d(l.body.inertia.diagonal().asDiagonal());
  }
  return {plant, ctrl};
}

}  // namespace aerialqp
