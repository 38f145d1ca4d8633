#include "aerialqp/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "yaml_util.hpp"

namespace aerialqp {

using namespace yaml_util;

double ModelDescription::total_mass() const {
  double m = base.mass;
  for (const auto& link : links) m += link.body.mass;
  return m;
}

namespace {

template <typename Getter>
Eigen::VectorXd collect(const std::vector<Link>& links, Getter get) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(links.size()));
  for (std::size_t i = 0; i < links.size(); ++i) out[static_cast<Eigen::Index>(i)] = get(links[i].joint);
  return out;
}

}  // namespace

Eigen::VectorXd ModelDescription::q_min() const {
  return collect(links, [](const JointParams& j) { return j.q_min; });
}
Eigen::VectorXd ModelDescription::q_max() const {
  return collect(links, [](const JointParams& j) { return j.q_max; });
}
Eigen::VectorXd ModelDescription::tau_min() const {
  return collect(links, [](const JointParams& j) { return j.tau_min; });
}
Eigen::VectorXd ModelDescription::tau_max() const {
  return collect(links, [](const JointParams& j) { return j.tau_max; });
}
Eigen::VectorXd ModelDescription::joint_damping() const {
  return collect(links, [](const JointParams& j) { return j.viscous_damping; });
}

// ---------------------------------------------------------------------------
// Validation

void validate_body(const BodyParams& body, const std::string& prefix) {
  if (!(body.mass > 0.0) || !std::isfinite(body.mass)) {
    throw ValidationError(prefix + ".mass", "must be positive and finite");
  }
  if (!body.com_offset.allFinite()) throw ValidationError(prefix + ".com_offset", "non-finite entry");
  const Eigen::Matrix3d& I = body.inertia;
  if (!I.allFinite()) throw ValidationError(prefix + ".inertia", "non-finite entry");
  const double scale = std::max(1.0, I.cwiseAbs().maxCoeff());
  if ((I - I.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ValidationError(prefix + ".inertia", "not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(I);
  const Eigen::Vector3d& p = eig.eigenvalues();
  if (!(p.minCoeff() > 0.0)) throw ValidationError(prefix + ".inertia", "not positive definite");
  const double slack = 1e-12 * p.maxCoeff();
  if (p[0] + p[1] < p[2] - slack || p[0] + p[2] < p[1] - slack || p[1] + p[2] < p[0] - slack) {
    throw ValidationError(prefix + ".inertia", "principal moments violate the triangle inequality");
  }
}

namespace {

void validate_rotation(const Eigen::Matrix3d& R, const std::string& field) {
  if ((R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 || R.determinant() <= 0.0) {
    throw ValidationError(field, "not a proper rotation matrix");
  }
}

void validate_joint(const JointParams& j, const std::string& prefix) {
  if (!j.axis.allFinite() || std::abs(j.axis.norm() - 1.0) > 1e-12) {
    throw ValidationError(prefix + ".axis", "must be a unit vector");
  }
  if (!j.origin_translation.allFinite()) throw ValidationError(prefix + ".origin_translation", "non-finite entry");
  validate_rotation(j.origin_rotation, prefix + ".origin_rotation");
  if (!(j.q_min < j.q_max)) throw ValidationError(prefix + ".q_min", "q_min must be below q_max");
  if (!(j.qd_max > 0.0)) throw ValidationError(prefix + ".qd_max", "must be positive");
  if (!(j.tau_min < 0.0)) throw ValidationError(prefix + ".tau_min", "must be negative");
  if (!(j.tau_max > 0.0)) throw ValidationError(prefix + ".tau_max", "must be positive");
  if (!(j.viscous_damping >= 0.0)) throw ValidationError(prefix + ".viscous_damping", "must be nonnegative");
}

void validate_rotors(const RotorGeometry& r) {
  if (!(r.arm_length > 0.0)) throw ValidationError("rotors.arm_length", "must be positive");
  if (!(r.yaw_torque_coefficient > 0.0)) throw ValidationError("rotors.yaw_torque_coefficient", "must be positive");
  for (int i = 0; i < kNumRotors; ++i) {
    const int s = r.spin_signs[static_cast<std::size_t>(i)];
    const int next = r.spin_signs[static_cast<std::size_t>((i + 1) % kNumRotors)];
    if ((s != 1 && s != -1) || s != -next) {
      throw ValidationError("rotors.spin_signs", "entries must be +1/-1 and alternate around the frame");
    }
  }
  if (!(r.f_min < r.f_max) || r.f_min < 0.0) throw ValidationError("rotors.f_min", "need 0 <= f_min < f_max");
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(allocation_matrix(r));
  const auto& sv = svd.singularValues();
  if (!(sv[3] > 1e-12 * sv[0])) throw ValidationError("rotors", "allocation matrix is singular");
}

}  // namespace

void validate_model(const ModelDescription& model) {
  validate_body(model.base, "base");
  if (model.links.empty()) throw ValidationError("links", "at least one link is required");
  for (std::size_t i = 0; i < model.links.size(); ++i) {
    const std::string prefix = "links[" + std::to_string(i) + "]";
    validate_body(model.links[i].body, prefix);
    validate_joint(model.links[i].joint, prefix + ".joint");
  }
  validate_rotors(model.rotors);
  if (!model.tool_offset.allFinite()) throw ValidationError("tool_offset", "non-finite entry");
  if (!(model.gravity >= 0.0) || !std::isfinite(model.gravity)) throw ValidationError("gravity", "must be >= 0");
  if (!(model.total_mass() > 0.0)) throw ValidationError("total_mass", "must be positive");
}

namespace {

bool is_diagonal(const Eigen::MatrixXd& A) {
  return (A - Eigen::MatrixXd(A.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
}

void require_positive_diagonal3(const Eigen::Matrix3d& K, const char* name) {
  if (!K.allFinite() || !is_diagonal(K) || !(K.diagonal().minCoeff() > 0.0)) {
    throw ValidationError(name, "must be diagonal with positive entries");
  }
}

double min_eigenvalue(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

bool is_symmetric(const Eigen::MatrixXd& A) {
  return (A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff());
}

}  // namespace

void validate_gains(const GainSet& g, int num_joints) {
  require_positive_diagonal3(g.Kp_B, "Kp_B");
  require_positive_diagonal3(g.Kv_B, "Kv_B");
  require_positive_diagonal3(g.Kp_psi, "Kp_psi");
  require_positive_diagonal3(g.Kv_psi, "Kv_psi");
  require_positive_diagonal3(g.Kp_M, "Kp_M");
  require_positive_diagonal3(g.Kv_M, "Kv_M");
  require_positive_diagonal3(g.lambda_p, "lambda_p");
  require_positive_diagonal3(g.lambda_v, "lambda_v");

  const Eigen::Index d = 6 + num_joints;
  if (g.W1.rows() != kTaskDim || g.W1.cols() != kTaskDim) {
    throw ValidationError("W1", "W1 dimension must be 12x12, got " + std::to_string(g.W1.rows()) + "x" +
                                    std::to_string(g.W1.cols()));
  }
  if (!g.W1.allFinite() || !is_symmetric(g.W1)) throw ValidationError("W1", "W1 not symmetric");
  for (int bi = 0; bi < 4; ++bi) {
    for (int bj = 0; bj < 4; ++bj) {
      if (bi != bj && g.W1.block(3 * bi, 3 * bj, 3, 3).cwiseAbs().maxCoeff() != 0.0) {
        throw ValidationError("W1", "W1 must be block diagonal in 3x3 task blocks");
      }
    }
  }
  if (min_eigenvalue(g.W1) < -1e-12 * std::max(1.0, g.W1.cwiseAbs().maxCoeff())) {
    throw ValidationError("W1", "W1 not positive semidefinite");
  }

  if (g.W2.rows() != d || g.W2.cols() != d) {
    throw ValidationError("W2", "W2 dimension must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  if (!g.W2.allFinite() || !is_symmetric(g.W2)) throw ValidationError("W2", "W2 not symmetric");
  if (!(min_eigenvalue(g.W2) > 0.0)) throw ValidationError("W2", "W2 not positive definite");

  if (g.lambda_reg.rows() != d || g.lambda_reg.cols() != d) {
    throw ValidationError("lambda_reg", "lambda_reg dimension must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  if (!g.lambda_reg.allFinite() || !is_diagonal(g.lambda_reg) || g.lambda_reg.diagonal().minCoeff() < 0.0) {
    throw ValidationError("lambda_reg", "lambda_reg must be diagonal and nonnegative");
  }
  if (!std::isfinite(g.K_scale) || g.K_scale < 0.0) throw ValidationError("K_scale", "must be >= 0");
  if (!std::isfinite(g.K_offset) || g.K_offset < 0.0) throw ValidationError("K_offset", "must be >= 0");
  if (g.K_scale == 0.0 && g.K_offset == 0.0) {
    throw ValidationError("K_offset", "K = K_scale*M + K_offset*I must be positive definite");
  }
}

// ---------------------------------------------------------------------------
// YAML reading

namespace {

void check_schema_version(const YAML::Node& root, const std::string& what) {
  const int version = static_cast<int>(get_double(root, "schema_version", what));
  if (version != kModelSchemaVersion) {
    throw ParseError(what + ": unsupported schema_version " + std::to_string(version));
  }
}

BodyParams read_body(const YAML::Node& node, const std::string& where) {
  BodyParams b;
  b.mass = get_double(node, "mass", where);
  b.com_offset = read_vec3(require(node, "com_offset", where), where + ".com_offset");
  b.inertia = read_mat3(require(node, "inertia", where), where + ".inertia");
  return b;
}

}  // namespace

ModelDescription parse_model(const std::string& yaml_text) {
  const YAML::Node root = parse_document(yaml_text);
  if (!root.IsMap()) throw ParseError("model: expected a mapping at the top level");
  check_schema_version(root, "model");

  ModelDescription m;
  m.gravity = get_double_or(root, "gravity", 9.81, "model");
  m.base = read_body(require(root, "base", "model"), "base");
  if (root["tool_offset"]) m.tool_offset = read_vec3(root["tool_offset"], "tool_offset");

  const YAML::Node rotors = require(root, "rotors", "model");
  m.rotors.arm_length = get_double(rotors, "arm_length", "rotors");
  m.rotors.yaw_torque_coefficient = get_double(rotors, "yaw_torque_coefficient", "rotors");
  const auto signs = read_list(require(rotors, "spin_signs", "rotors"), "rotors.spin_signs");
  if (signs.size() != kNumRotors) throw ParseError("rotors.spin_signs: expected 4 entries");
  for (int i = 0; i < kNumRotors; ++i) m.rotors.spin_signs[static_cast<std::size_t>(i)] = static_cast<int>(signs[static_cast<std::size_t>(i)]);
  m.rotors.f_min = get_double(rotors, "f_min", "rotors");
  m.rotors.f_max = get_double(rotors, "f_max", "rotors");

  const YAML::Node links = require(root, "links", "model");
  if (!links.IsSequence()) throw ParseError("links: expected a list");
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::string where = "links[" + std::to_string(i) + "]";
    const YAML::Node ln = links[i];
    Link link;
    link.name = ln["name"] ? ln["name"].as<std::string>() : "link" + std::to_string(i + 1);
    link.body = read_body(ln, where);
    const YAML::Node jn = require(ln, "joint", where);
    const std::string jw = where + ".joint";
    link.joint.axis = read_vec3(require(jn, "axis", jw), jw + ".axis");
    link.joint.origin_translation = read_vec3(require(jn, "origin_translation", jw), jw + ".origin_translation");
    if (jn["origin_rotation"]) link.joint.origin_rotation = read_mat3(jn["origin_rotation"], jw + ".origin_rotation");
    link.joint.q_min = get_double(jn, "q_min", jw);
    link.joint.q_max = get_double(jn, "q_max", jw);
    link.joint.qd_max = get_double(jn, "qd_max", jw);
    link.joint.tau_min = get_double(jn, "tau_min", jw);
    link.joint.tau_max = get_double(jn, "tau_max", jw);
    link.joint.viscous_damping = get_double_or(jn, "viscous_damping", 0.0, jw);
    m.links.push_back(std::move(link));
  }

  validate_model(m);
  return m;
}

ModelDescription load_model(const std::string& path) { return parse_model(read_file(path)); }

namespace {

void emit_vec(YAML::Emitter& out, const Eigen::Ref<const Eigen::VectorXd>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v[i];
  out << YAML::EndSeq;
}

void emit_mat(YAML::Emitter& out, const Eigen::Ref<const Eigen::MatrixXd>& m) {
  out << YAML::BeginSeq;
  for (Eigen::Index r = 0; r < m.rows(); ++r) emit_vec(out, m.row(r).transpose());
  out << YAML::EndSeq;
}

void emit_body(YAML::Emitter& out, const BodyParams& b) {
  out << YAML::Key << "mass" << YAML::Value << b.mass;
  out << YAML::Key << "com_offset" << YAML::Value;
  emit_vec(out, b.com_offset);
  out << YAML::Key << "inertia" << YAML::Value;
  emit_mat(out, b.inertia);
}

}  // namespace

std::string serialize_model(const ModelDescription& m) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "schema_version" << YAML::Value << kModelSchemaVersion;
  out << YAML::Key << "gravity" << YAML::Value << m.gravity;
  out << YAML::Key << "base" << YAML::Value << YAML::BeginMap;
  emit_body(out, m.base);
  out << YAML::EndMap;
  out << YAML::Key << "tool_offset" << YAML::Value;
  emit_vec(out, m.tool_offset);
  out << YAML::Key << "rotors" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "arm_length" << YAML::Value << m.rotors.arm_length;
  out << YAML::Key << "yaw_torque_coefficient" << YAML::Value << m.rotors.yaw_torque_coefficient;
  out << YAML::Key << "spin_signs" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (int s : m.rotors.spin_signs) out << s;
  out << YAML::EndSeq;
  out << YAML::Key << "f_min" << YAML::Value << m.rotors.f_min;
  out << YAML::Key << "f_max" << YAML::Value << m.rotors.f_max;
  out << YAML::EndMap;
  out << YAML::Key << "links" << YAML::Value << YAML::BeginSeq;
  for (const auto& link : m.links) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << link.name;
    emit_body(out, link.body);
    out << YAML::Key << "joint" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "axis" << YAML::Value;
    emit_vec(out, link.joint.axis);
    out << YAML::Key << "origin_translation" << YAML::Value;
    emit_vec(out, link.joint.origin_translation);
    out << YAML::Key << "origin_rotation" << YAML::Value;
    emit_mat(out, link.joint.origin_rotation);
    out << YAML::Key << "q_min" << YAML::Value << link.joint.q_min;
    out << YAML::Key << "q_max" << YAML::Value << link.joint.q_max;
    out << YAML::Key << "qd_max" << YAML::Value << link.joint.qd_max;
    out << YAML::Key << "tau_min" << YAML::Value << link.joint.tau_min;
    out << YAML::Key << "tau_max" << YAML::Value << link.joint.tau_max;
    out << YAML::Key << "viscous_damping" << YAML::Value << link.joint.viscous_damping;
    out << YAML::EndMap;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// ---------------------------------------------------------------------------
// Gains

GainSet parse_gains(const std::string& yaml_text) {
  const YAML::Node root = parse_document(yaml_text);
  if (!root.IsMap()) throw ParseError("gains: expected a mapping at the top level");
  check_schema_version(root, "gains");
  GainSet g;
  g.Kp_B = read_mat3(require(root, "Kp_B", "gains"), "Kp_B");
  g.Kv_B = read_mat3(require(root, "Kv_B", "gains"), "Kv_B");
  g.Kp_psi = read_mat3(require(root, "Kp_psi", "gains"), "Kp_psi");
  g.Kv_psi = read_mat3(require(root, "Kv_psi", "gains"), "Kv_psi");
  g.Kp_M = read_mat3(require(root, "Kp_M", "gains"), "Kp_M");
  g.Kv_M = read_mat3(require(root, "Kv_M", "gains"), "Kv_M");
  g.lambda_p = read_mat3(require(root, "lambda_p", "gains"), "lambda_p");
  g.lambda_v = read_mat3(require(root, "lambda_v", "gains"), "lambda_v");
  g.W1 = read_matrix(require(root, "W1", "gains"), "W1");
  g.W2 = read_matrix(require(root, "W2", "gains"), "W2");
  g.lambda_reg = read_matrix(require(root, "lambda_reg", "gains"), "lambda_reg");
  g.K_scale = get_double(root, "K_scale", "gains");
  g.K_offset = get_double(root, "K_offset", "gains");
  return g;
}

GainSet load_gains(const std::string& path) { return parse_gains(read_file(path)); }

GainSet reference_gains(int n) {
  GainSet g;
  g.Kp_B = Eigen::Vector3d(4, 4, 9).asDiagonal();
  g.Kv_B = Eigen::Vector3d(4, 4, 6).asDiagonal();
  g.Kp_psi = 9.0 * Eigen::Matrix3d::Identity();
  g.Kv_psi = 6.0 * Eigen::Matrix3d::Identity();
  g.Kp_M = 49.0 * Eigen::Matrix3d::Identity();
  g.Kv_M = 14.0 * Eigen::Matrix3d::Identity();
  g.lambda_p = 100.0 * Eigen::Matrix3d::Identity();
  g.lambda_v = Eigen::Vector3d(10, 10, 20).asDiagonal();

  Eigen::VectorXd w1(kTaskDim);
  w1 << Eigen::Vector3d::Constant(100), Eigen::Vector3d::Constant(50), Eigen::Vector3d::Constant(500),
      Eigen::Vector3d::Constant(500);
  g.W1 = w1.asDiagonal();

  Eigen::VectorXd w2(6 + n), lam(6 + n);
  w2 << Eigen::Vector3d::Constant(100), Eigen::Vector3d::Constant(50), Eigen::VectorXd::Constant(n, 0.01);
  lam << Eigen::Vector3d::Constant(1), Eigen::Vector3d::Constant(10), Eigen::VectorXd::Constant(n, 100);
  g.W2 = w2.asDiagonal();
  g.lambda_reg = lam.asDiagonal();
  g.K_scale = 10.0;
  g.K_offset = 0.001;
  return g;
}

Eigen::Matrix4d allocation_matrix(const RotorGeometry& geom) {
  Eigen::Matrix4d xi;
  for (int i = 0; i < kNumRotors; ++i) {
    const double angle = M_PI / 4.0 + M_PI / 2.0 * i;
    const double x = geom.arm_length * std::cos(angle);
    const double y = geom.arm_length * std::sin(angle);
    // thrust along +z_B at (x, y, 0): torque = r x F e3 = (y F, -x F, 0)
    xi(0, i) = 1.0;
    xi(1, i) = y;
    xi(2, i) = -x;
    xi(3, i) = geom.yaw_torque_coefficient * geom.spin_signs[static_cast<std::size_t>(i)];
  }
  return xi;
}

}  // namespace aerialqp
