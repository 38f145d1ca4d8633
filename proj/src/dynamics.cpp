#include "aerialqp/dynamics.hpp"

namespace aerialqp {

GeneralizedInput GeneralizedInput::from_vector(const Eigen::VectorXd& u) {
  GeneralizedInput in;
  in.w_B = u.head<6>();
  in.tau_M = u.tail(u.size() - 6);
  return in;
}

Eigen::VectorXd GeneralizedInput::to_vector() const {
  Eigen::VectorXd u(6 + tau_M.size());
  u << w_B, tau_M;
  return u;
}

DynamicsTerms dynamics_terms(const ModelDescription& model, const SystemState& s) {
  const int d = model.dofs();
  const auto bodies = body_jacobians(model, s);
  DynamicsTerms t;
  t.M = Eigen::MatrixXd::Zero(d, d);
  t.C = Eigen::MatrixXd::Zero(d, d);
  t.G = Eigen::VectorXd::Zero(d);
  const Eigen::Vector3d gravity_load(0.0, 0.0, model.gravity);

  for (std::size_t i = 0; i < bodies.size(); ++i) {
    const BodyParams& body = i == 0 ? model.base : model.links[i - 1].body;
    const BodyKinematics& b = bodies[i];
    const Eigen::Vector3d h = body.inertia * (b.Jw * s.nu);  // body angular momentum
    t.M.noalias() += body.mass * b.Jv.transpose() * b.Jv + b.Jw.transpose() * body.inertia * b.Jw;
    t.C.noalias() += body.mass * b.Jv.transpose() * b.Jv_dot + b.Jw.transpose() * body.inertia * b.Jw_dot -
                     b.Jw.transpose() * skew(h) * b.Jw;
    t.G.noalias() += b.Jv.transpose() * (body.mass * gravity_load);
  }
  return t;
}

GeneralizedInput inverse_dynamics(const DynamicsTerms& terms, const Eigen::VectorXd& nu_r_dot,
                                  const Eigen::VectorXd& nu_r, const Eigen::VectorXd& s_err,
                                  const Eigen::MatrixXd& K) {
  const Eigen::VectorXd u = terms.M * nu_r_dot + terms.C * nu_r + terms.G + K * s_err;
  return GeneralizedInput::from_vector(u);
}

Eigen::VectorXd forward_dynamics(const ModelDescription& model, const SystemState& s, const GeneralizedInput& u,
                                 const Eigen::VectorXd& friction) {
  const DynamicsTerms t = dynamics_terms(model, s);
  const int n = model.num_joints();
  Eigen::VectorXd rhs = u.to_vector() - t.C * s.nu - t.G;
  rhs.tail(n) -= friction.cwiseProduct(s.joint_velocity());

  Eigen::LLT<Eigen::MatrixXd> llt(t.M);
  if (llt.info() != Eigen::Success) throw SolveError("mass matrix is not positive definite");
  Eigen::VectorXd nu_dot = llt.solve(rhs);
  const double residual = (t.M * nu_dot - rhs).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-9 * std::max(1.0, rhs.cwiseAbs().maxCoeff()))) {
    throw SolveError("forward dynamics residual " + std::to_string(residual) + " exceeds 1e-9");
  }
  return nu_dot;
}

double total_energy(const ModelDescription& model, const SystemState& s) {
  const auto bodies = body_jacobians(model, s);
  double E = 0.0;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    const BodyParams& body = i == 0 ? model.base : model.links[i - 1].body;
    const Eigen::Vector3d v = bodies[i].Jv * s.nu;
    const Eigen::Vector3d w = bodies[i].Jw * s.nu;
    E += 0.5 * body.mass * v.squaredNorm() + 0.5 * w.dot(body.inertia * w) + body.mass * model.gravity * bodies[i].p_ic.z();
  }
  return E;
}

Eigen::Matrix<double, 6, 1> rotors_to_wrench(const Eigen::Vector4d& F, const Eigen::Matrix3d& R,
                                             const RotorGeometry& geom) {
  const Eigen::Vector4d body = allocation_matrix(geom) * F;
  Eigen::Matrix<double, 6, 1> w;
  w << R.col(2) * body[0], body.tail<3>();
  return w;
}

Eigen::Vector4d wrench_to_rotors(double f_z, const Eigen::Vector3d& tau_b, const RotorGeometry& geom) {
  const Eigen::Vector4d rhs(f_z, tau_b.x(), tau_b.y(), tau_b.z());
  return allocation_matrix(geom).partialPivLu().solve(rhs);
}

}  // namespace aerialqp
