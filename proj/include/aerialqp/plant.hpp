#ifndef AERIALQP_PLANT_HPP_
#define AERIALQP_PLANT_HPP_

#include <utility>

#include <Eigen/Dense>

#include "aerialqp/kinematics.hpp"
#include "aerialqp/model.hpp"

namespace aerialqp {

struct PerturbationSpec {
  double link_mass_scale = 0.9;
  bool zero_inertia_products = true;
  double joint_friction = 5e-4;  // N·m/(rad/s), plant only
};

/// Actuation actually applied by the plant after clipping to the actuator box.
struct AppliedInput {
  Eigen::Vector4d F = Eigen::Vector4d::Zero();
  Eigen::VectorXd tau_M;
};

AppliedInput clip_input(const ModelDescription& plant, const Eigen::Vector4d& F, const Eigen::VectorXd& tau_M);

/// Advances the plant by dt with one RK4 step on the rotation manifold (Munthe-Kaas form)
/// under zero-order-hold inputs. Joint friction comes from plant.links[i].joint.viscous_damping.
SystemState plant_step(const ModelDescription& plant, const SystemState& s, const Eigen::Vector4d& F,
                       const Eigen::VectorXd& tau_M, double dt);

/// Returns (plant model, controller model). The plant carries the friction; the controller
/// model carries the scaled link masses and (optionally) diagonal link inertias.
std::pair<ModelDescription, ModelDescription> apply_perturbations(const ModelDescription& truth,
                                                                  const PerturbationSpec& p);

}  // namespace aerialqp

#endif  // AERIALQP_PLANT_HPP_
