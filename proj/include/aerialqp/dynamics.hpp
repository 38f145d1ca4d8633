#ifndef AERIALQP_DYNAMICS_HPP_
#define AERIALQP_DYNAMICS_HPP_

#include <stdexcept>

#include <Eigen/Dense>

#include "aerialqp/kinematics.hpp"
#include "aerialqp/model.hpp"

namespace aerialqp {

class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// M(q) nu_dot + C(q, nu) nu + G(q) = u.
/// G is the generalized gravity load; its translational block is +(sum of masses) g e3.
struct DynamicsTerms {
  Eigen::MatrixXd M;
  Eigen::MatrixXd C;
  Eigen::VectorXd G;
};

/// u = [w_B; tau_M] with w_B = [world-frame force; body-frame torque about the base origin].
struct GeneralizedInput {
  Eigen::Matrix<double, 6, 1> w_B = Eigen::Matrix<double, 6, 1>::Zero();
  Eigen::VectorXd tau_M;

  static GeneralizedInput from_vector(const Eigen::VectorXd& u);
  [[nodiscard]] Eigen::VectorXd to_vector() const;
};

DynamicsTerms dynamics_terms(const ModelDescription& model, const SystemState& s);

/// u = M nu_r_dot + C nu_r + G + K s_err.
GeneralizedInput inverse_dynamics(const DynamicsTerms& terms, const Eigen::VectorXd& nu_r_dot,
                                  const Eigen::VectorXd& nu_r, const Eigen::VectorXd& s_err,
                                  const Eigen::MatrixXd& K);

/// nu_dot = M^{-1} (u - C nu - G - [0; diag(friction) q_dot]).
Eigen::VectorXd forward_dynamics(const ModelDescription& model, const SystemState& s, const GeneralizedInput& u,
                                 const Eigen::VectorXd& friction);

/// Kinetic plus gravitational potential energy, V = sum m_i g z_ic.
double total_energy(const ModelDescription& model, const SystemState& s);

/// Base wrench T_w Xi F for rotor thrusts F.
Eigen::Matrix<double, 6, 1> rotors_to_wrench(const Eigen::Vector4d& F, const Eigen::Matrix3d& R,
                                             const RotorGeometry& geom);

/// F = Xi^{-1} [f_z; tau_b]. No clipping.
Eigen::Vector4d wrench_to_rotors(double f_z, const Eigen::Vector3d& tau_b, const RotorGeometry& geom);

}  // namespace aerialqp

#endif  // AERIALQP_DYNAMICS_HPP_
