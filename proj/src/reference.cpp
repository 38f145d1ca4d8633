#include "aerialqp/reference.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace aerialqp {

namespace {

struct Blend {
  std::size_t from = 0;
  std::size_t to = 0;
  double s = 0.0, s_dot = 0.0, s_ddot = 0.0;
};

double segment_duration(const SetpointSchedule& sched, std::size_t k) {
  const double gap = sched.waypoints[k].time - sched.waypoints[k - 1].time;
  const double d = sched.waypoints[k].duration;
  return d > 0.0 ? d : gap;
}

Blend locate(const SetpointSchedule& sched, double t) {
  const auto& w = sched.waypoints;
  Blend b;
  if (w.size() == 1 || t <= w.front().time) return b;
  for (std::size_t k = 1; k < w.size(); ++k) {
    if (t >= w[k].time) {
      b.from = b.to = k;
      continue;
    }
    const double T = segment_duration(sched, k);
    const double start = w[k].time - T;
    if (t <= start) return b;
    const Eigen::Vector3d s = quintic_blend((t - start) / T);
    b.from = k - 1;
    b.to = k;
    b.s = s[0];
    b.s_dot = s[1] / T;
    b.s_ddot = s[2] / (T * T);
    return b;
  }
  return b;
}

}  // namespace

void SetpointSchedule::validate() const {
  if (waypoints.empty()) throw std::invalid_argument("schedule.waypoints: at least one waypoint required");
  for (std::size_t k = 1; k < waypoints.size(); ++k) {
    const double gap = waypoints[k].time - waypoints[k - 1].time;
    if (!(gap > 0.0)) {
      throw std::invalid_argument("schedule.waypoints[" + std::to_string(k) + "].time: times must strictly increase");
    }
    if (waypoints[k].duration > gap + 1e-12) {
      throw std::invalid_argument("schedule.waypoints[" + std::to_string(k) +
                                  "].duration: exceeds the gap to the previous waypoint");
    }
  }
}

Eigen::Vector3d quintic_blend(double tau) {
  const double t2 = tau * tau, t3 = t2 * tau;
  return {t3 * (10.0 - 15.0 * tau + 6.0 * t2), 30.0 * t2 * (1.0 - tau) * (1.0 - tau),
          60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau)};
}

void yaw_direction(double yaw, double yaw_rate, double yaw_acc, Eigen::Vector3d& x, Eigen::Vector3d& x_dot,
                   Eigen::Vector3d& x_ddot) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  x = Eigen::Vector3d(c, -s, 0.0);
  const Eigen::Vector3d dx(-s, -c, 0.0);
  x_dot = dx * yaw_rate;
  x_ddot = Eigen::Vector3d(-c, s, 0.0) * (yaw_rate * yaw_rate) + dx * yaw_acc;
}

TaskReference quintic_reference(const SetpointSchedule& schedule, double t) {
  const Blend b = locate(schedule, t);
  const Waypoint& a = schedule.waypoints[b.from];
  const Waypoint& z = schedule.waypoints[b.to];
  TaskReference r;
  r.p_B_d = a.p_B + b.s * (z.p_B - a.p_B);
  r.p_B_d_dot = b.s_dot * (z.p_B - a.p_B);
  r.p_B_d_ddot = b.s_ddot * (z.p_B - a.p_B);
  r.p_E_d = a.p_E + b.s * (z.p_E - a.p_E);
  r.p_E_d_dot = b.s_dot * (z.p_E - a.p_E);
  r.p_E_d_ddot = b.s_ddot * (z.p_E - a.p_E);
  const double dyaw = z.yaw - a.yaw;
  yaw_direction(a.yaw + b.s * dyaw, b.s_dot * dyaw, b.s_ddot * dyaw, r.X_psi_d, r.X_psi_d_dot, r.X_psi_d_ddot);
  return r;
}

double reference_yaw(const SetpointSchedule& schedule, double t) {
  const Blend b = locate(schedule, t);
  const double a = schedule.waypoints[b.from].yaw;
  return a + b.s * (schedule.waypoints[b.to].yaw - a);
}

}  // namespace aerialqp
