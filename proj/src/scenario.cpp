#include "aerialqp/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "aerialqp/dynamics.hpp"
#include "yaml_util.hpp"

namespace aerialqp {

using namespace yaml_util;

namespace {

bool read_bool(const YAML::Node& node, const std::string& key, bool fallback, const std::string& where) {
  if (!node[key]) return fallback;
  try {
    return node[key].as<bool>();
  } catch (const YAML::Exception&) {
    throw ParseError(where + "." + key + ": expected true or false");
  }
}

std::string read_string(const YAML::Node& node, const std::string& key, const std::string& fallback,
                        const std::string& where) {
  if (!node[key]) return fallback;
  try {
    return node[key].as<std::string>();
  } catch (const YAML::Exception&) {
    throw ParseError(where + "." + key + ": expected a string");
  }
}

int read_int(const YAML::Node& node, const std::string& key, int fallback, const std::string& where) {
  const double v = get_double_or(node, key, fallback, where);
  if (v != std::floor(v)) throw ParseError(where + "." + key + ": expected an integer");
  return static_cast<int>(v);
}

Eigen::VectorXd read_vector(const YAML::Node& node, const std::string& where) {
  const auto v = read_list(node, where);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::Matrix3d yaw_rotation(double yaw) { return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).matrix(); }

}  // namespace

void ScenarioConfig::validate(int num_joints) const {
  if (!(duration > 0.0)) throw ValidationError("duration", "must be positive");
  if (!(control_period > 0.0)) throw ValidationError("control_period", "must be positive");
  if (substeps < 1) throw ValidationError("substeps", "must be at least 1");
  if (steady_state_start < 0.0) throw ValidationError("steady_state_start", "must be >= 0");
  if (!(controller.joint_horizon > 0.0)) throw ValidationError("controller.joint_horizon", "must be positive");
  if (!(perturbation.link_mass_scale > 0.0)) throw ValidationError("perturbation.link_mass_scale", "must be positive");
  if (perturbation.joint_friction < 0.0) throw ValidationError("perturbation.joint_friction", "must be >= 0");
  if (initial.q.size() != 0 && initial.q.size() != num_joints) {
    throw ValidationError("initial.q", "expected " + std::to_string(num_joints) + " entries");
  }
  try {
    noise.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError("noise", e.what());
  }
  try {
    schedule.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError("waypoints", e.what());
  }
}

ScenarioConfig parse_scenario(const std::string& yaml_text) {
  const YAML::Node root = parse_document(yaml_text);
  if (!root.IsMap()) throw ParseError("scenario: expected a mapping at the top level");
  const int version = static_cast<int>(get_double(root, "schema_version", "scenario"));
  if (version != kScenarioSchemaVersion) {
    throw ParseError("scenario: unsupported schema_version " + std::to_string(version));
  }

  ScenarioConfig c;
  c.name = read_string(root, "name", c.name, "scenario");
  c.model_path = read_string(root, "model", "", "scenario");
  c.gains_path = read_string(root, "gains", "", "scenario");
  c.duration = get_double(root, "duration", "scenario");
  c.control_period = get_double_or(root, "control_period", c.control_period, "scenario");
  c.substeps = read_int(root, "substeps", c.substeps, "scenario");
  c.steady_state_start = get_double_or(root, "steady_state_start", c.steady_state_start, "scenario");

  if (const YAML::Node ctl = root["controller"]) {
    ControllerConfig& cc = c.controller;
    cc.integral_enabled = read_bool(ctl, "integral", cc.integral_enabled, "controller");
    cc.anti_windup = read_bool(ctl, "anti_windup", cc.anti_windup, "controller");
    cc.joint_horizon = get_double_or(ctl, "joint_horizon", cc.joint_horizon, "controller");
    const std::string mass = read_string(ctl, "thrust_dir_mass", "base", "controller");
    if (mass == "base") {
      cc.thrust_dir_mass = ThrustDirectionMass::kBase;
    } else if (mass == "total") {
      cc.thrust_dir_mass = ThrustDirectionMass::kTotal;
    } else {
      throw ParseError("controller.thrust_dir_mass: expected 'base' or 'total'");
    }
    cc.qp.tol = get_double_or(ctl, "qp_tol", cc.qp.tol, "controller");
    cc.qp.max_iter = read_int(ctl, "qp_max_iter", cc.qp.max_iter, "controller");
  }

  if (const YAML::Node p = root["perturbation"]) {
    c.perturbation_enabled = read_bool(p, "enabled", true, "perturbation");
    c.perturbation.link_mass_scale = get_double_or(p, "link_mass_scale", c.perturbation.link_mass_scale, "perturbation");
    c.perturbation.zero_inertia_products =
        read_bool(p, "zero_inertia_products", c.perturbation.zero_inertia_products, "perturbation");
    c.perturbation.joint_friction = get_double_or(p, "joint_friction", c.perturbation.joint_friction, "perturbation");
  }

  if (const YAML::Node n = root["noise"]) {
    NoiseSpec& ns = c.noise;
    c.noise_enabled = read_bool(n, "enabled", true, "noise");
    ns.gnss_sigma_pos = get_double_or(n, "gnss_sigma_pos", ns.gnss_sigma_pos, "noise");
    ns.gnss_sigma_vel = get_double_or(n, "gnss_sigma_vel", ns.gnss_sigma_vel, "noise");
    ns.gnss_rate = get_double_or(n, "gnss_rate", ns.gnss_rate, "noise");
    ns.encoder_bits = read_int(n, "encoder_bits", ns.encoder_bits, "noise");
    ns.gyro_sigma = get_double_or(n, "gyro_sigma", ns.gyro_sigma, "noise");
    ns.accel_sigma = get_double_or(n, "accel_sigma", ns.accel_sigma, "noise");
    ns.joint_vel_lpf_cutoff = get_double_or(n, "joint_vel_lpf_cutoff", ns.joint_vel_lpf_cutoff, "noise");
    ns.seed = static_cast<std::uint64_t>(get_double_or(n, "seed", static_cast<double>(ns.seed), "noise"));
  }

  if (const YAML::Node init = root["initial"]) {
    if (init["p_B"]) c.initial.p_B = read_vec3(init["p_B"], "initial.p_B");
    c.initial.yaw = get_double_or(init, "yaw", 0.0, "initial");
    if (init["q"]) c.initial.q = read_vector(init["q"], "initial.q");
  }

  const YAML::Node wps = require(root, "waypoints", "scenario");
  if (!wps.IsSequence()) throw ParseError("waypoints: expected a list");
  for (std::size_t k = 0; k < wps.size(); ++k) {
    const std::string where = "waypoints[" + std::to_string(k) + "]";
    Waypoint w;
    w.time = get_double(wps[k], "time", where);
    w.p_B = read_vec3(require(wps[k], "p_B", where), where + ".p_B");
    w.yaw = get_double_or(wps[k], "yaw", 0.0, where);
    w.p_E = read_vec3(require(wps[k], "p_E", where), where + ".p_E");
    w.duration = get_double_or(wps[k], "duration", 0.0, where);
    c.schedule.waypoints.push_back(w);
  }
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  ScenarioConfig c = parse_scenario(read_file(path));
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (dir / p).lexically_normal().string();
  };
  resolve(c.model_path);
  resolve(c.gains_path);
  return c;
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * M_PI); }

Eigen::Vector3d rmse_components(const std::vector<Eigen::Vector3d>& errors) {
  if (errors.empty()) return Eigen::Vector3d::Zero();
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (const auto& e : errors) acc += e.cwiseAbs2();
  return (acc / static_cast<double>(errors.size())).cwiseSqrt();
}

RunMetrics compute_metrics(const std::vector<LogRow>& rows, const ModelDescription& truth, double steady_start) {
  RunMetrics m;
  m.steps = static_cast<int>(rows.size());
  if (rows.empty()) return m;
  std::vector<Eigen::Vector3d> eB, eE;
  eB.reserve(rows.size());
  eE.reserve(rows.size());
  double yaw_sum = 0.0;
  long long iter_sum = 0;
  const Eigen::VectorXd qmin = truth.q_min(), qmax = truth.q_max();
  const Eigen::VectorXd tmin = truth.tau_min(), tmax = truth.tau_max();
  constexpr double kBoxTol = 1e-8;

  for (const LogRow& r : rows) {
    eB.push_back(r.p_B - r.p_B_ref);
    eE.push_back(r.p_E - r.p_E_ref);
    const double ey = std::abs(wrap_angle(r.yaw - r.yaw_ref));
    yaw_sum += ey;
    if (r.t >= steady_start - 1e-12) {
      m.ss_p_B = m.ss_p_B.cwiseMax(eB.back().cwiseAbs());
      m.ss_p_E = m.ss_p_E.cwiseMax(eE.back().cwiseAbs());
      m.ss_yaw = std::max(m.ss_yaw, ey);
    }
    if (r.first_qp_status == QPStatus::kOptimal) ++m.optimal_steps;
    iter_sum += r.qp_iters;
    m.max_qp_iterations = std::max(m.max_qp_iterations, r.qp_iters);
    if (r.fallback == static_cast<int>(FallbackLevel::kDroppedJointRows)) ++m.dropped_joint_rows;
    if (r.fallback == static_cast<int>(FallbackLevel::kGravityHold)) ++m.gravity_holds;
    if (r.degenerate_thrust) ++m.degenerate_thrust;
    if ((r.F_cmd.array() > truth.rotors.f_max + kBoxTol).any() || (r.F_cmd.array() < truth.rotors.f_min - kBoxTol).any()) {
      ++m.rotor_cmd_outside_box;
    }
    if ((r.tau_cmd.array() > tmax.array() + kBoxTol).any() || (r.tau_cmd.array() < tmin.array() - kBoxTol).any()) {
      ++m.torque_cmd_outside_box;
    }
    const double excess = std::max((r.q - qmax).maxCoeff(), (qmin - r.q).maxCoeff());
    if (excess > 1e-6) ++m.joint_limit_violations;
    m.max_joint_limit_excess = std::max(m.max_joint_limit_excess, excess);
    if (r.qp_status == QPStatus::kOptimal) m.max_underactuation = std::max(m.max_underactuation, r.underactuation);
    if (!r.p_B.allFinite() || !r.q.allFinite() || r.p_B.norm() > 1e3) m.bounded = false;
  }
  m.rmse_p_B = rmse_components(eB);
  m.rmse_p_E = rmse_components(eE);
  m.mean_abs_yaw_error = yaw_sum / static_cast<double>(rows.size());
  m.feasibility_rate = static_cast<double>(m.optimal_steps) / static_cast<double>(rows.size());
  m.mean_qp_iterations = static_cast<double>(iter_sum) / static_cast<double>(rows.size());
  m.final_norm_s = rows.back().norm_s;
  m.final_thrust_angle = rows.back().thrust_angle;
  return m;
}

RunLog run_scenario(const ScenarioConfig& config, const ModelDescription& truth, const GainSet& gains) {
  const int n = truth.num_joints();
  config.validate(n);
  validate_gains(gains, n);

  ModelDescription plant = truth;
  ModelDescription ctrl_model = truth;
  if (config.perturbation_enabled) {
    std::tie(plant, ctrl_model) = apply_perturbations(truth, config.perturbation);
  }
  const NoiseSpec noise = config.noise_enabled ? config.noise : NoiseSpec::disabled();
  Sensor sensor(noise);

  SystemState x = SystemState::at_rest(n);
  x.p_B = config.initial.p_B;
  x.R = yaw_rotation(config.initial.yaw);
  if (config.initial.q.size() == n) x.q = config.initial.q;

  const double dt = config.control_period;
  const double h = dt / config.substeps;
  const auto steps = static_cast<long long>(std::llround(config.duration / dt));

  RunLog log;
  log.scenario = config.name;
  log.integral_enabled = config.controller.integral_enabled;
  log.seed = noise.seed;
  log.num_joints = n;
  log.rows.reserve(static_cast<std::size_t>(steps));

  ControllerState cs = ControllerState::initialize(sensor.measure(x, 0.0));
  Sensor fresh(noise);  // the initialization draw must not shift the main stream
  sensor = fresh;

  for (long long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const SystemState meas = sensor.measure(x, t);
    const TaskReference ref = quintic_reference(config.schedule, t);
    const ControlStepResult step = control_step(ctrl_model, gains, config.controller, meas, ref, cs, dt);
    cs = step.state;
    const ControlOutput& out = step.output;
    const AppliedInput applied = clip_input(plant, out.F, out.tau_M);

    LogRow row;
    row.t = t;
    row.p_B = x.p_B;
    row.p_B_ref = ref.p_B_d;
    row.yaw = yaw_of(x.R);
    row.yaw_ref = reference_yaw(config.schedule, t);
    row.p_E = end_effector(plant, x.q, x.joint_velocity()).p_E_B;
    row.p_E_ref = ref.p_E_d;
    row.q = x.q;
    row.F = applied.F;
    row.tau = applied.tau_M;
    row.F_cmd = out.F;
    row.tau_cmd = out.tau_M;
    row.norm_s = out.diagnostics.norm_s;
    row.qp_status = out.diagnostics.qp_status;
    row.first_qp_status = out.diagnostics.first_qp_status;
    row.qp_iters = out.diagnostics.qp_iterations;
    row.active_count = static_cast<int>(out.diagnostics.active_set.size());
    row.fallback = static_cast<int>(out.diagnostics.fallback);
    row.underactuation = out.diagnostics.underactuation_residual;
    const Eigen::Vector3d X_t = x.R.col(2);
    row.thrust_angle = std::atan2(X_t.cross(out.diagnostics.X_t_d).norm(), X_t.dot(out.diagnostics.X_t_d));
    row.degenerate_thrust = out.diagnostics.degenerate_thrust;
    log.rows.push_back(std::move(row));

    for (int i = 0; i < config.substeps; ++i) x = plant_step(plant, x, out.F, out.tau_M, h);
  }
  log.final_state = x;
  log.metrics = compute_metrics(log.rows, truth, config.steady_state_start);
  return log;
}

void write_csv(std::ostream& out, const RunLog& log) {
  const int n = log.num_joints;
  out << "t,p_B_x,p_B_y,p_B_z,p_B_ref_x,p_B_ref_y,p_B_ref_z,yaw,yaw_ref,p_E_x,p_E_y,p_E_z,p_E_ref_x,p_E_ref_y,p_E_ref_z";
  for (int i = 1; i <= n; ++i) out << ",q_" << i;
  for (int i = 1; i <= kNumRotors; ++i) out << ",F_" << i;
  for (int i = 1; i <= n; ++i) out << ",tau_" << i;
  out << ",norm_s,qp_status,qp_iters,active_count,fallback_flag\n";

  out << std::setprecision(17);
  auto vec = [&out](const auto& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << v[i];
  };
  for (const LogRow& r : log.rows) {
    out << r.t;
    vec(r.p_B);
    vec(r.p_B_ref);
    out << ',' << r.yaw << ',' << r.yaw_ref;
    vec(r.p_E);
    vec(r.p_E_ref);
    vec(r.q);
    vec(r.F);
    vec(r.tau);
    out << ',' << r.norm_s << ',' << to_string(r.qp_status) << ',' << r.qp_iters << ',' << r.active_count << ','
        << r.fallback << '\n';
  }
}

std::string summary_json(const RunLog& log) {
  using nlohmann::json;
  const RunMetrics& m = log.metrics;
  auto arr = [](const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); };
  json j;
  j["scenario"] = log.scenario;
  j["integral"] = log.integral_enabled;
  j["seed"] = log.seed;
  j["steps"] = m.steps;
  j["rmse_p_B"] = arr(m.rmse_p_B);
  j["mean_abs_yaw_error"] = m.mean_abs_yaw_error;
  j["rmse_p_E"] = arr(m.rmse_p_E);
  j["steady_state"] = {{"p_B_max_abs", arr(m.ss_p_B)}, {"yaw_max_abs", m.ss_yaw}, {"p_E_max_abs", arr(m.ss_p_E)}};
  j["final"] = {{"norm_s", m.final_norm_s}, {"thrust_angle", m.final_thrust_angle}};
  j["violations"] = {{"rotor_cmd_outside_box", m.rotor_cmd_outside_box},
                     {"torque_cmd_outside_box", m.torque_cmd_outside_box},
                     {"joint_limit_violations", m.joint_limit_violations},
                     {"max_joint_limit_excess", m.max_joint_limit_excess},
                     {"max_underactuation_residual", m.max_underactuation}};
  j["qp"] = {{"feasibility_rate", m.feasibility_rate},
             {"mean_iterations", m.mean_qp_iterations},
             {"max_iterations", m.max_qp_iterations},
             {"dropped_joint_rows", m.dropped_joint_rows},
             {"gravity_holds", m.gravity_holds},
             {"degenerate_thrust", m.degenerate_thrust}};
  j["bounded"] = m.bounded;
  return j.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

}  // namespace aerialqp
