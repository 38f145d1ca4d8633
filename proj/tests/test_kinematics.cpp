#include <cmath>

#include <gtest/gtest.h>

#include "aerialqp/kinematics.hpp"
#include "test_support.hpp"

using namespace aerialqp;
using aerialqp::testing::default_model;
using aerialqp::testing::flow;
using aerialqp::testing::propagate_twists;
using aerialqp::testing::random_state;
using aerialqp::testing::Rng;

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Single link hanging at the base origin with its CoM one metre along base x.
ModelDescription one_link_model() {
  ModelDescription m;
  m.base.mass = 1.0;
  m.base.inertia = Eigen::Matrix3d::Identity() * 0.01;
  Link l;
  l.name = "l";
  l.body.mass = 0.1;
  l.body.com_offset = Eigen::Vector3d::UnitX();
  l.body.inertia = Eigen::Matrix3d::Identity() * 1e-3;
  l.joint.axis = Eigen::Vector3d::UnitZ();
  l.joint.q_min = -1;
  l.joint.q_max = 1;
  l.joint.qd_max = 1;
  l.joint.tau_min = -1;
  l.joint.tau_max = 1;
  m.links.push_back(l);
  validate_model(m);
  return m;
}

}  // namespace

TEST(Skew, Examples) {
  EXPECT_EQ(skew(Eigen::Vector3d::Zero()), Eigen::Matrix3d::Zero());
  Eigen::Matrix3d expected;
  expected << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  EXPECT_EQ(skew(Eigen::Vector3d(1, 2, 3)), expected);
  EXPECT_EQ(skew(Eigen::Vector3d::UnitX()) * Eigen::Vector3d::UnitY(), Eigen::Vector3d::UnitZ());
}

TEST(Skew, CrossProductAndAntisymmetryProperty) {
  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector3d v = rng.vector(3, -5, 5), w = rng.vector(3, -5, 5);
    EXPECT_LE((skew(v) * w - v.cross(w)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(skew(v).transpose(), -skew(v));
  }
}

TEST(SO3, ExpMatchesAngleAxisAndRightJacobianInverse) {
  Rng rng(2);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Vector3d phi = rng.vector(3, -2, 2) * (k % 3 == 0 ? 1e-5 : 1.0);
    const Eigen::Matrix3d ref = Eigen::AngleAxisd(phi.norm(), phi.normalized()).toRotationMatrix();
    EXPECT_LE(max_abs(so3_exp(phi) - ref), 1e-13);
    // phi_dot = Jr^{-1} omega  <=>  d/dt exp(phi) = exp(phi) S(omega).
    const Eigen::Vector3d omega = rng.vector(3, -1, 1);
    constexpr double h = 1e-6;
    const Eigen::Vector3d phi_dot = so3_right_jacobian_inverse(phi) * omega;
    const Eigen::Matrix3d R_dot = (so3_exp(phi + h * phi_dot) - so3_exp(phi - h * phi_dot)) / (2 * h);
    EXPECT_LE(max_abs(R_dot - so3_exp(phi) * skew(omega)), 1e-7);
  }
}

TEST(SO3, OrthonormalizeAndYaw) {
  Rng rng(3);
  const Eigen::Matrix3d R = rng.rotation();
  const Eigen::Matrix3d noisy = R + 1e-6 * rng.matrix(3, 3, -1, 1);
  const Eigen::Matrix3d P = orthonormalize(noisy);
  EXPECT_LE(max_abs(P.transpose() * P - Eigen::Matrix3d::Identity()), 1e-14);
  EXPECT_GT(P.determinant(), 0.0);
  EXPECT_LE(max_abs(P - R), 1e-5);
  EXPECT_NEAR(yaw_of(Eigen::AngleAxisd(0.7, Eigen::Vector3d::UnitZ()).toRotationMatrix()), 0.7, 1e-15);
}

TEST(ForwardKinematics, ZeroStateGivesNominalOffsets) {
  const ModelDescription& m = default_model();
  const SystemState s = SystemState::at_rest(m.num_joints());
  const auto bodies = forward_kinematics(m, s);
  // Links hang straight down: CoM z = sum of joint offsets + own CoM offset.
  double z = 0.0;
  for (int i = 0; i < m.num_joints(); ++i) {
    z += m.links[static_cast<std::size_t>(i)].joint.origin_translation.z();
    const Eigen::Vector3d expected(0, 0, z + m.links[static_cast<std::size_t>(i)].body.com_offset.z());
    EXPECT_LE((bodies[static_cast<std::size_t>(i) + 1].p_ic - expected).norm(), 1e-15);
    EXPECT_EQ(bodies[static_cast<std::size_t>(i) + 1].R_i, Eigen::Matrix3d::Identity());
  }
}

TEST(ForwardKinematics, TranslationShiftsEveryBody) {
  const ModelDescription& m = default_model();
  Rng rng(4);
  SystemState s = random_state(m, rng);
  const auto a = forward_kinematics(m, s);
  const Eigen::Vector3d d(0.3, -1.2, 4.0);
  s.p_B += d;
  const auto b = forward_kinematics(m, s);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_LE((b[i].p_ic - a[i].p_ic - d).norm(), 1e-14);
    EXPECT_EQ(b[i].R_i, a[i].R_i);
  }
}

TEST(ForwardKinematics, QuarterTurnAboutZ) {
  const ModelDescription m = one_link_model();
  SystemState s = SystemState::at_rest(1);
  s.p_B = Eigen::Vector3d(1, 2, 3);
  s.R = Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const auto bodies = forward_kinematics(m, s);
  EXPECT_LE((bodies[1].p_ic - (s.p_B + Eigen::Vector3d::UnitY())).norm(), 1e-15);
}

TEST(ForwardKinematics, MatchesIndependentChainProperty) {
  const ModelDescription& m = default_model();
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const SystemState s = random_state(m, rng);
    const auto bodies = forward_kinematics(m, s);
    const auto o = propagate_twists(m, s);
    for (std::size_t i = 0; i < bodies.size(); ++i) {
      EXPECT_LE((bodies[i].p_ic - o.com[i]).norm(), 1e-14);
      EXPECT_LE(max_abs(bodies[i].R_i - o.rot[i]), 1e-14);
    }
  }
}

TEST(BodyJacobians, BaseBlockStructure) {
  ModelDescription m = default_model();
  m.base.com_offset = Eigen::Vector3d(0.01, -0.02, 0.03);
  Rng rng(6);
  const SystemState s = random_state(m, rng);
  const auto bodies = body_jacobians(m, s);
  const Eigen::MatrixXd& Jv = bodies[0].Jv;
  EXPECT_EQ(Jv.leftCols(3), Eigen::MatrixXd::Identity(3, 3));
  EXPECT_LE(max_abs(Jv.middleCols(3, 3) - (-s.R * skew(m.base.com_offset))), 1e-15);
  EXPECT_EQ(Jv.rightCols(m.num_joints()), Eigen::MatrixXd::Zero(3, m.num_joints()));
}

TEST(BodyJacobians, CentredBaseCoM) {
  const ModelDescription& m = default_model();
  Rng rng(7);
  const auto bodies = body_jacobians(m, random_state(m, rng));
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(3, m.dofs());
  expected.leftCols(3).setIdentity();
  EXPECT_EQ(bodies[0].Jv, expected);
}

TEST(BodyJacobians, LeadingColumnsProperty) {
  const ModelDescription& m = default_model();
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    for (const auto& b : body_jacobians(m, random_state(m, rng))) {
      EXPECT_EQ(b.Jv.leftCols(3), Eigen::MatrixXd::Identity(3, 3));
      EXPECT_EQ(b.Jw.leftCols(3), Eigen::MatrixXd::Zero(3, 3));
    }
  }
}

TEST(BodyJacobians, VelocitiesMatchTwistPropagationProperty) {
  const ModelDescription& m = default_model();
  Rng rng(9);
  for (int k = 0; k < 1000; ++k) {
    const SystemState s = random_state(m, rng, 3.0);
    const auto bodies = body_jacobians(m, s);
    const auto o = propagate_twists(m, s);
    for (std::size_t i = 0; i < bodies.size(); ++i) {
      ASSERT_LE((bodies[i].Jv * s.nu - o.com_vel[i]).cwiseAbs().maxCoeff(), 1e-10) << "body " << i;
      ASSERT_LE((bodies[i].Jw * s.nu - o.omega_body[i]).cwiseAbs().maxCoeff(), 1e-10) << "body " << i;
    }
  }
}

TEST(BodyJacobians, DriftMatchesFiniteDifferenceProperty) {
  const ModelDescription& m = default_model();
  Rng rng(10);
  constexpr double h = 1e-5;
  for (int k = 0; k < 100; ++k) {
    const SystemState s = random_state(m, rng);
    const auto b0 = body_jacobians(m, s);
    const auto bp = body_jacobians(m, flow(s, h));
    const auto bm = body_jacobians(m, flow(s, -h));
    for (std::size_t i = 0; i < b0.size(); ++i) {
      const Eigen::Vector3d fd_v = (bp[i].Jv * s.nu - bm[i].Jv * s.nu) / (2 * h);
      const Eigen::Vector3d fd_w = (bp[i].Jw * s.nu - bm[i].Jw * s.nu) / (2 * h);
      EXPECT_LE((fd_v - b0[i].Jv_dot_nu).cwiseAbs().maxCoeff(), 1e-5);
      EXPECT_LE((fd_w - b0[i].Jw_dot_nu).cwiseAbs().maxCoeff(), 1e-5);
      // The full matrices too, not only their product with nu.
      EXPECT_LE(max_abs((bp[i].Jv - bm[i].Jv) / (2 * h) - b0[i].Jv_dot), 1e-5);
      EXPECT_LE(max_abs((bp[i].Jw - bm[i].Jw) / (2 * h) - b0[i].Jw_dot), 1e-5);
    }
  }
}

TEST(EndEffector, MatchesChainOracle) {
  const ModelDescription& m = default_model();
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    const SystemState s = random_state(m, rng);
    const auto ee = end_effector(m, s.q, s.joint_velocity());
    EXPECT_LE((ee.p_E_B - propagate_twists(m, s).ee_base).norm(), 1e-14);
  }
}

TEST(TaskStack, RestAtIdentity) {
  const ModelDescription& m = default_model();
  const TaskStack t = task_stack(m, SystemState::at_rest(m.num_joints()));
  EXPECT_EQ(t.drift, (Eigen::Matrix<double, 12, 1>::Zero()));
  EXPECT_EQ(t.X_psi(), Eigen::Vector3d::UnitX());
  EXPECT_EQ(t.X_t(), Eigen::Vector3d::UnitZ());
  EXPECT_LE(max_abs(t.J_task.block(9, 3, 3, 3) + skew(Eigen::Vector3d::UnitZ())), 0.0);
}

TEST(TaskStack, RowStructureProperty) {
  const ModelDescription& m = default_model();
  const int n = m.num_joints();
  Rng rng(12);
  for (int k = 0; k < 100; ++k) {
    const SystemState s = random_state(m, rng);
    const TaskStack t = task_stack(m, s);
    EXPECT_EQ(t.J_task.block(0, 0, 3, 3), Eigen::MatrixXd::Identity(3, 3));
    EXPECT_EQ(t.J_task.block(0, 3, 3, 3 + n), Eigen::MatrixXd::Zero(3, 3 + n));
    EXPECT_EQ(t.J_task.block(3, 3, 3, 3), Eigen::MatrixXd(skew(s.R.transpose() * Eigen::Vector3d::UnitX())));
    EXPECT_EQ(t.J_task.block(6, 0, 3, 6), Eigen::MatrixXd::Zero(3, 6));
    EXPECT_LE(max_abs(t.J_task.block(9, 3, 3, 3) + s.R * skew(Eigen::Vector3d::UnitZ())), 1e-15);
    EXPECT_NEAR(t.X_psi().norm(), 1.0, 1e-14);
    EXPECT_NEAR(t.X_t().norm(), 1.0, 1e-14);
    const Eigen::Vector3d w = s.base_angular_velocity();
    EXPECT_LE((t.drift.segment<3>(3) - w.cross(w.cross(t.X_psi()))).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LE((t.drift.segment<3>(9) - s.R * w.cross(w.cross(Eigen::Vector3d::UnitZ()))).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(TaskStack, DriftMatchesFiniteDifferenceProperty) {
  const ModelDescription& m = default_model();
  Rng rng(13);
  constexpr double h = 1e-5;
  for (int k = 0; k < 200; ++k) {
    const SystemState s = random_state(m, rng);
    const TaskStack t0 = task_stack(m, s);
    const TaskStack tp = task_stack(m, flow(s, h));
    const TaskStack tm = task_stack(m, flow(s, -h));
    const Eigen::Matrix<double, 12, 1> fd_x_dot = (tp.X - tm.X) / (2 * h);
    const Eigen::Matrix<double, 12, 1> fd_x_ddot = (tp.X_dot - tm.X_dot) / (2 * h);
    EXPECT_LE((fd_x_dot - t0.X_dot).cwiseAbs().maxCoeff(), 1e-5);
    EXPECT_LE((fd_x_ddot - t0.drift).cwiseAbs().maxCoeff(), 1e-5);
  }
}
