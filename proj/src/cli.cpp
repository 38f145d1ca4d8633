#include "aerialqp/cli.hpp"

#include <filesystem>
#include <future>
#include <limits>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "aerialqp/dynamics.hpp"
#include "aerialqp/plant.hpp"
#include "aerialqp/scenario.hpp"

namespace aerialqp {

namespace {

struct LoadedRun {
  ScenarioConfig scenario;
  ModelDescription model;
  GainSet gains;
};

std::string require_file(const std::string& path, const std::string& field) {
  if (path.empty()) throw ValidationError(field, "not given (flag or scenario entry)");
  if (!std::filesystem::is_regular_file(path)) throw ValidationError(field, "file not found '" + path + "'");
  return path;
}

LoadedRun load_run(const RunOptions& opts) {
  LoadedRun r;
  r.scenario = load_scenario(require_file(opts.scenario_path, "scenario_path"));
  const std::string model_path = opts.model_path.empty() ? r.scenario.model_path : opts.model_path;
  const std::string gains_path = opts.gains_path.empty() ? r.scenario.gains_path : opts.gains_path;
  r.model = load_model(require_file(model_path, "model_path"));
  r.gains = load_gains(require_file(gains_path, "gains_path"));
  validate_gains(r.gains, r.model.num_joints());
  if (opts.seed) r.scenario.noise.seed = *opts.seed;
  if (opts.integral) r.scenario.controller.integral_enabled = *opts.integral;
  if (opts.duration) r.scenario.duration = *opts.duration;
  r.scenario.validate(r.model.num_joints());
  return r;
}

void write_outputs(const RunLog& log, const std::string& dir, const std::string& stem) {
  std::ostringstream csv;
  write_csv(csv, log);
  write_file_atomic((std::filesystem::path(dir) / (stem + ".csv")).string(), csv.str());
  write_file_atomic((std::filesystem::path(dir) / (stem + "_summary.json")).string(), summary_json(log));
}

std::string vec3(const Eigen::Vector3d& v) {
  std::ostringstream ss;
  ss << std::scientific << std::setprecision(3) << '[' << v.x() << ", " << v.y() << ", " << v.z() << ']';
  return ss.str();
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const ParseError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

// Random state with joints inside their limits and a generic orientation.
SystemState random_state(const ModelDescription& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = model.num_joints();
  SystemState s = SystemState::at_rest(n);
  s.p_B = Eigen::Vector3d(u(rng), u(rng), 1.0 + u(rng));
  s.R = so3_exp(Eigen::Vector3d(u(rng), u(rng), u(rng)) * 1.5);
  for (int i = 0; i < n; ++i) {
    const JointParams& j = model.links[static_cast<std::size_t>(i)].joint;
    s.q[i] = j.q_min + 0.5 * (u(rng) + 1.0) * (j.q_max - j.q_min);
  }
  for (Eigen::Index i = 0; i < s.nu.size(); ++i) s.nu[i] = u(rng);
  return s;
}

// State moved by h along the flow with constant nu.
SystemState flow(const SystemState& s, double h) {
  SystemState out = s;
  out.p_B += h * s.base_velocity();
  out.R = s.R * so3_exp(h * s.base_angular_velocity());
  out.q += h * s.joint_velocity();
  return out;
}

}  // namespace

std::vector<PropertyResult> dynamics_property_suite(const ModelDescription& model, std::uint64_t seed, int samples) {
  std::mt19937_64 rng(seed);
  PropertyResult sym{"mass_matrix_symmetric_positive_definite", true, 0.0, 1e-10};
  PropertyResult skew{"coriolis_skew_symmetry", true, 0.0, 1e-5};
  PropertyResult trip{"inverse_forward_round_trip", true, 0.0, 1e-8};
  const Eigen::VectorXd no_friction = Eigen::VectorXd::Zero(model.num_joints());

  for (int k = 0; k < samples; ++k) {
    const SystemState s = random_state(model, rng);
    const DynamicsTerms t = dynamics_terms(model, s);
    const double asym = (t.M - t.M.transpose()).cwiseAbs().maxCoeff();
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(t.M).eigenvalues().minCoeff();
    sym.worst = std::max(sym.worst, asym);
    if (asym > sym.threshold || !(min_eig > 0.0)) sym.passed = false;

    constexpr double h = 1e-6;
    const Eigen::MatrixXd M_dot =
        (dynamics_terms(model, flow(s, h)).M - dynamics_terms(model, flow(s, -h)).M) / (2.0 * h);
    const double r = std::abs(s.nu.dot((M_dot - 2.0 * t.C) * s.nu)) / s.nu.squaredNorm();
    skew.worst = std::max(skew.worst, r);
    if (r > skew.threshold) skew.passed = false;

    Eigen::VectorXd nu_dot(s.nu.size());
    for (Eigen::Index i = 0; i < nu_dot.size(); ++i) nu_dot[i] = std::uniform_real_distribution<double>(-2, 2)(rng);
    const GeneralizedInput u = inverse_dynamics(t, nu_dot, s.nu, Eigen::VectorXd::Zero(s.nu.size()),
                                                Eigen::MatrixXd::Zero(s.nu.size(), s.nu.size()));
    const double e = (forward_dynamics(model, s, u, no_friction) - nu_dot).cwiseAbs().maxCoeff();
    trip.worst = std::max(trip.worst, e);
    if (e > trip.threshold) trip.passed = false;
  }

  PropertyResult energy{"energy_conservation_unactuated", true, 0.0, 1e-6};
  ModelDescription frictionless = model;
  for (Link& l : frictionless.links) l.joint.viscous_damping = 0.0;
  SystemState s = random_state(model, rng);
  s.p_B.z() = 2.0;
  const double E0 = total_energy(frictionless, s);
  const Eigen::VectorXd zero_tau = Eigen::VectorXd::Constant(model.num_joints(), 0.0);
  for (int k = 0; k < 1000; ++k) s = plant_step(frictionless, s, Eigen::Vector4d::Zero(), zero_tau, 1e-3);
  energy.worst = std::abs(total_energy(frictionless, s) - E0) / std::abs(E0);
  energy.passed = energy.worst <= energy.threshold;

  return {sym, skew, energy, trip};
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const LoadedRun r = load_run(opts);
    spdlog::info("running scenario '{}' for {} s", r.scenario.name, r.scenario.duration);
    const RunLog log = run_scenario(r.scenario, r.model, r.gains);
    write_outputs(log, opts.out_dir, r.scenario.name);
    const RunMetrics& m = log.metrics;
    out << "scenario " << r.scenario.name << ": rmse_p_B " << vec3(m.rmse_p_B) << ", rmse_p_E " << vec3(m.rmse_p_E)
        << ", mean |yaw error| " << m.mean_abs_yaw_error << " rad, qp feasibility " << 100.0 * m.feasibility_rate
        << " %\n";
    if (m.gravity_holds > 0) {
      for (const LogRow& row : log.rows) {
        if (row.fallback == static_cast<int>(FallbackLevel::kGravityHold)) {
          err << "final fallback (gravity hold) first hit at t = " << row.t << " s, " << m.gravity_holds
              << " steps in total\n";
          break;
        }
      }
      return kExitFallback;
    }
    return kExitOk;
  });
}

int cmd_ablate(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const LoadedRun r = load_run(opts);
    ScenarioConfig on = r.scenario, off = r.scenario;
    on.controller.integral_enabled = true;
    off.controller.integral_enabled = false;
    spdlog::info("ablation of '{}': integral on and off", r.scenario.name);
    auto fut_off = std::async(std::launch::async, [&] { return run_scenario(off, r.model, r.gains); });
    const RunLog log_on = run_scenario(on, r.model, r.gains);
    const RunLog log_off = fut_off.get();
    write_outputs(log_on, opts.out_dir, r.scenario.name + "_on");
    write_outputs(log_off, opts.out_dir, r.scenario.name + "_off");

    const RunMetrics& a = log_on.metrics;
    const RunMetrics& b = log_off.metrics;
    auto ratio = [](double x, double y) { return y > 0.0 ? x / y : std::numeric_limits<double>::infinity(); };
    nlohmann::json j;
    auto arr = [](const Eigen::Vector3d& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
    j["scenario"] = r.scenario.name;
    j["on"] = {{"rmse_p_B", arr(a.rmse_p_B)}, {"rmse_p_E", arr(a.rmse_p_E)}, {"mean_abs_yaw_error", a.mean_abs_yaw_error},
               {"ss_p_B", arr(a.ss_p_B)}};
    j["off"] = {{"rmse_p_B", arr(b.rmse_p_B)}, {"rmse_p_E", arr(b.rmse_p_E)}, {"mean_abs_yaw_error", b.mean_abs_yaw_error},
                {"ss_p_B", arr(b.ss_p_B)}};
    j["ratio_off_on"] = {{"rmse_p_B", ratio(b.rmse_p_B.norm(), a.rmse_p_B.norm())},
                         {"rmse_p_E", ratio(b.rmse_p_E.norm(), a.rmse_p_E.norm())},
                         {"mean_abs_yaw_error", ratio(b.mean_abs_yaw_error, a.mean_abs_yaw_error)}};
    write_file_atomic((std::filesystem::path(opts.out_dir) / (r.scenario.name + "_ablation.json")).string(),
                      j.dump(2) + "\n");

    out << std::left << std::setw(22) << "metric" << std::setw(34) << "integral ON" << std::setw(34) << "integral OFF"
        << "OFF/ON\n";
    out << std::setw(22) << "rmse p_B [m]" << std::setw(34) << vec3(a.rmse_p_B) << std::setw(34) << vec3(b.rmse_p_B)
        << ratio(b.rmse_p_B.norm(), a.rmse_p_B.norm()) << '\n';
    out << std::setw(22) << "rmse p_E^B [m]" << std::setw(34) << vec3(a.rmse_p_E) << std::setw(34) << vec3(b.rmse_p_E)
        << ratio(b.rmse_p_E.norm(), a.rmse_p_E.norm()) << '\n';
    out << std::setw(22) << "steady p_B [m]" << std::setw(34) << vec3(a.ss_p_B) << std::setw(34) << vec3(b.ss_p_B)
        << ratio(b.ss_p_B.norm(), a.ss_p_B.norm()) << '\n';
    out << std::setw(22) << "mean |yaw err| [rad]" << std::setw(34) << a.mean_abs_yaw_error << std::setw(34)
        << b.mean_abs_yaw_error << ratio(b.mean_abs_yaw_error, a.mean_abs_yaw_error) << '\n';
    return (a.gravity_holds > 0 || b.gravity_holds > 0) ? kExitFallback : kExitOk;
  });
}

int cmd_validate(const std::string& model_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ModelDescription model = load_model(require_file(model_path, "model_path"));
    const auto results = dynamics_property_suite(model);
    const PropertyResult* first_fail = nullptr;
    for (const PropertyResult& r : results) {
      out << (r.passed ? "PASS " : "FAIL ") << r.name << " (worst " << std::scientific << std::setprecision(3)
          << r.worst << ", limit " << r.threshold << ")\n";
      if (!r.passed && first_fail == nullptr) first_fail = &r;
    }
    if (first_fail != nullptr) {
      err << "property failed: " << first_fail->name << '\n';
      return kExitPropertyFailed;
    }
    return kExitOk;
  });
}

}  // namespace aerialqp
