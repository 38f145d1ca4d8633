#include <cmath>
#include <fstream>
#include <regex>
#include <string>

#include <gtest/gtest.h>

#include "aerialqp/model.hpp"
#include "test_support.hpp"

using namespace aerialqp;
using aerialqp::testing::config_path;
using aerialqp::testing::default_model;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string default_text() { return read_text(config_path("model_default.yaml")); }

// Replaces the first match of `pattern` in the default model text.
std::string edited(const std::string& pattern, const std::string& replacement) {
  return std::regex_replace(default_text(), std::regex(pattern), replacement, std::regex_constants::format_first_only);
}

std::string validation_field(const std::string& text) {
  try {
    parse_model(text);
  } catch (const ValidationError& e) {
    return e.field();
  }
  return "";
}

void expect_models_equal(const ModelDescription& a, const ModelDescription& b, double tol) {
  auto body_eq = [tol](const BodyParams& x, const BodyParams& y) {
    EXPECT_NEAR(x.mass, y.mass, tol);
    EXPECT_LE((x.com_offset - y.com_offset).cwiseAbs().maxCoeff(), tol);
    EXPECT_LE((x.inertia - y.inertia).cwiseAbs().maxCoeff(), tol);
  };
  body_eq(a.base, b.base);
  EXPECT_NEAR(a.gravity, b.gravity, tol);
  EXPECT_LE((a.tool_offset - b.tool_offset).cwiseAbs().maxCoeff(), tol);
  EXPECT_NEAR(a.rotors.arm_length, b.rotors.arm_length, tol);
  EXPECT_NEAR(a.rotors.yaw_torque_coefficient, b.rotors.yaw_torque_coefficient, tol);
  EXPECT_EQ(a.rotors.spin_signs, b.rotors.spin_signs);
  EXPECT_NEAR(a.rotors.f_min, b.rotors.f_min, tol);
  EXPECT_NEAR(a.rotors.f_max, b.rotors.f_max, tol);
  ASSERT_EQ(a.links.size(), b.links.size());
  for (std::size_t i = 0; i < a.links.size(); ++i) {
    EXPECT_EQ(a.links[i].name, b.links[i].name);
    body_eq(a.links[i].body, b.links[i].body);
    const JointParams& x = a.links[i].joint;
    const JointParams& y = b.links[i].joint;
    EXPECT_LE((x.axis - y.axis).cwiseAbs().maxCoeff(), tol);
    EXPECT_LE((x.origin_translation - y.origin_translation).cwiseAbs().maxCoeff(), tol);
    EXPECT_LE((x.origin_rotation - y.origin_rotation).cwiseAbs().maxCoeff(), tol);
    EXPECT_NEAR(x.q_min, y.q_min, tol);
    EXPECT_NEAR(x.q_max, y.q_max, tol);
    EXPECT_NEAR(x.qd_max, y.qd_max, tol);
    EXPECT_NEAR(x.tau_min, y.tau_min, tol);
    EXPECT_NEAR(x.tau_max, y.tau_max, tol);
    EXPECT_NEAR(x.viscous_damping, y.viscous_damping, tol);
  }
}

}  // namespace

TEST(LoadModel, DefaultFileHasReferenceBase) {
  const ModelDescription& m = default_model();
  EXPECT_DOUBLE_EQ(m.base.mass, 1.5);
  const Eigen::Matrix3d expected = Eigen::Vector3d(0.01826, 0.01826, 0.03512).asDiagonal();
  EXPECT_EQ(m.base.inertia, expected);
  EXPECT_EQ(m.num_joints(), 5);
  EXPECT_EQ(m.dofs(), 11);
}

TEST(LoadModel, JointLimitsEchoedVerbatim) {
  const ModelDescription& m = default_model();
  const double expected_qmax[5] = {M_PI, M_PI / 2, M_PI / 4, M_PI, M_PI / 3};
  const double expected_tau[5] = {1.6, 5, 5, 5, 5};
  for (int i = 0; i < 5; ++i) {
    EXPECT_DOUBLE_EQ(m.q_max()[i], expected_qmax[i]);
    EXPECT_DOUBLE_EQ(m.q_min()[i], -expected_qmax[i]);
    EXPECT_DOUBLE_EQ(m.tau_max()[i], expected_tau[i]);
    EXPECT_DOUBLE_EQ(m.tau_min()[i], -expected_tau[i]);
  }
  EXPECT_DOUBLE_EQ(m.rotors.f_min, 0.0);
  EXPECT_DOUBLE_EQ(m.rotors.f_max, 15.0);
}

TEST(LoadModel, DefaultLinkMassesAreLightweight) {
  for (const Link& l : default_model().links) {
    EXPECT_GE(l.body.mass, 0.05);
    EXPECT_LE(l.body.mass, 0.15);
  }
}

TEST(LoadModel, ZeroBaseMassNamesField) {
  EXPECT_EQ(validation_field(edited(R"(mass: 1\.5)", "mass: 0")), "base.mass");
}

TEST(LoadModel, NegativeLinkMassRejected) {
  EXPECT_EQ(validation_field(edited(R"(mass: 0\.1\b)", "mass: -0.1")), "links[0].mass");
}

TEST(LoadModel, AsymmetricInertiaRejected) {
  const std::string f = validation_field(edited(R"(- \[2\.0e-07, 1\.727200e-05)", "- [3.0e-07, 1.727200e-05"));
  EXPECT_NE(f.find("inertia"), std::string::npos) << f;
}

TEST(LoadModel, TriangleInequalityEnforced) {
  BodyParams b;
  b.mass = 1.0;
  b.inertia = Eigen::Vector3d(1.0, 1.0, 2.5).asDiagonal();
  EXPECT_THROW(validate_body(b, "body"), ValidationError);
  b.inertia = Eigen::Vector3d(1.0, 1.0, 2.0).asDiagonal();
  EXPECT_NO_THROW(validate_body(b, "body"));
}

TEST(LoadModel, NonUnitAxisRejected) {
  ModelDescription m = default_model();
  m.links[1].joint.axis = Eigen::Vector3d(0, 1.0 + 1e-9, 0);
  try {
    validate_model(m);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "links[1].joint.axis");
  }
}

TEST(LoadModel, JointAndRotorInvariants) {
  ModelDescription m = default_model();
  m.links[0].joint.q_min = m.links[0].joint.q_max;
  EXPECT_THROW(validate_model(m), ValidationError);
  m = default_model();
  m.links[2].joint.tau_min = 0.5;
  EXPECT_THROW(validate_model(m), ValidationError);
  m = default_model();
  m.rotors.spin_signs = {1, 1, -1, -1};
  EXPECT_THROW(validate_model(m), ValidationError);
  m = default_model();
  m.rotors.arm_length = 0.0;
  EXPECT_THROW(validate_model(m), ValidationError);
  m = default_model();
  m.links.clear();
  EXPECT_THROW(validate_model(m), ValidationError);
}

TEST(LoadModel, MalformedDocumentIsParseError) {
  EXPECT_THROW(parse_model("schema_version: 1\nbase: [unbalanced"), ParseError);
  EXPECT_THROW(parse_model(edited("schema_version: 1", "schema_version: 7")), ParseError);
  EXPECT_THROW(parse_model(edited(R"(  com_offset: \[0\.0, 0\.0, 0\.0\]\n)", "")), ParseError);
  EXPECT_THROW(load_model("/nonexistent/model.yaml"), ParseError);
}

TEST(LoadModel, SerializeRoundTrip) {
  const ModelDescription& m = default_model();
  const ModelDescription back = parse_model(serialize_model(m));
  expect_models_equal(m, back, 1e-12);
}

TEST(LoadModel, RoundTripProperty) {
  // Random valid models: perturbed copies of the default with random rotations and masses.
  aerialqp::testing::Rng rng(11);
  for (int k = 0; k < 25; ++k) {
    ModelDescription m = default_model();
    m.base.mass = rng.uniform(0.5, 3.0);
    m.tool_offset = rng.vector(3, -0.1, 0.1);
    for (Link& l : m.links) {
      l.body.mass = rng.uniform(0.01, 0.5);
      l.body.com_offset = rng.vector(3, -0.1, 0.1);
      const Eigen::Matrix3d Q = rng.rotation();
      const Eigen::Vector3d p(rng.uniform(1, 2), rng.uniform(1, 2), rng.uniform(1, 2));
      l.body.inertia = 1e-4 * Q * p.asDiagonal() * Q.transpose();
      l.body.inertia = 0.5 * (l.body.inertia + l.body.inertia.transpose()).eval();
      l.joint.origin_rotation = rng.rotation();
      l.joint.axis = rng.vector(3, -1, 1).normalized();
      l.joint.viscous_damping = rng.uniform(0, 1e-3);
    }
    validate_model(m);
    expect_models_equal(m, parse_model(serialize_model(m)), 1e-12);
  }
}

TEST(AllocationMatrix, InverseIdentity) {
  aerialqp::testing::Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    RotorGeometry g;
    g.arm_length = rng.uniform(0.05, 1.0);
    g.yaw_torque_coefficient = rng.uniform(0.001, 0.1);
    const Eigen::Matrix4d X = allocation_matrix(g);
    EXPECT_LE((X * X.inverse() - Eigen::Matrix4d::Identity()).cwiseAbs().rowwise().sum().maxCoeff(), 1e-10);
  }
}

TEST(ValidateGains, ReferenceGainsAccepted) {
  EXPECT_NO_THROW(validate_gains(reference_gains(5), 5));
  EXPECT_NO_THROW(validate_gains(load_gains(config_path("gains_default.yaml")), 5));
}

TEST(ValidateGains, FileMatchesReferenceValues) {
  const GainSet a = load_gains(config_path("gains_default.yaml"));
  const GainSet b = reference_gains(5);
  EXPECT_EQ(a.Kp_B, b.Kp_B);
  EXPECT_EQ(a.Kv_B, b.Kv_B);
  EXPECT_EQ(a.Kp_psi, b.Kp_psi);
  EXPECT_EQ(a.Kv_psi, b.Kv_psi);
  EXPECT_EQ(a.Kp_M, b.Kp_M);
  EXPECT_EQ(a.Kv_M, b.Kv_M);
  EXPECT_EQ(a.lambda_p, b.lambda_p);
  EXPECT_EQ(a.lambda_v, b.lambda_v);
  EXPECT_EQ(a.W1, b.W1);
  EXPECT_EQ(a.W2, b.W2);
  EXPECT_EQ(a.lambda_reg, b.lambda_reg);
  EXPECT_EQ(a.K_scale, 10.0);
  EXPECT_EQ(a.K_offset, 0.001);
}

TEST(ValidateGains, ReferenceEntries) {
  const GainSet g = reference_gains(5);
  EXPECT_EQ(g.Kp_B.diagonal(), Eigen::Vector3d(4, 4, 9));
  EXPECT_EQ(g.Kv_B.diagonal(), Eigen::Vector3d(4, 4, 6));
  EXPECT_EQ(g.lambda_v.diagonal(), Eigen::Vector3d(10, 10, 20));
  EXPECT_EQ(g.W1(6, 6), 500.0);
  EXPECT_EQ(g.W2(10, 10), 0.01);
  EXPECT_EQ(g.lambda_reg(10, 10), 100.0);
}

TEST(ValidateGains, SingularW2Rejected) {
  GainSet g = reference_gains(5);
  g.W2(7, 7) = 0.0;
  try {
    validate_gains(g, 5);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "W2");
    EXPECT_NE(std::string(e.what()).find("W2 not positive definite"), std::string::npos);
  }
}

TEST(ValidateGains, WrongW1DimensionRejected) {
  GainSet g = reference_gains(5);
  g.W1 = Eigen::MatrixXd::Identity(9, 9);
  try {
    validate_gains(g, 5);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "W1");
    EXPECT_NE(std::string(e.what()).find("W1 dimension"), std::string::npos);
  }
}

TEST(ValidateGains, OtherDefinitenessChecks) {
  GainSet g = reference_gains(5);
  g.Kp_B(1, 1) = -1.0;
  EXPECT_THROW(validate_gains(g, 5), ValidationError);
  g = reference_gains(5);
  g.W1(0, 4) = g.W1(4, 0) = 1.0;  // couples two task blocks
  EXPECT_THROW(validate_gains(g, 5), ValidationError);
  g = reference_gains(5);
  g.lambda_reg(2, 2) = -0.1;
  EXPECT_THROW(validate_gains(g, 5), ValidationError);
  EXPECT_THROW(validate_gains(reference_gains(5), 4), ValidationError);
}
