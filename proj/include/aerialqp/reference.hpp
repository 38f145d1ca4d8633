#ifndef AERIALQP_REFERENCE_HPP_
#define AERIALQP_REFERENCE_HPP_

#include <vector>

#include <Eigen/Dense>

#include "aerialqp/controller.hpp"

namespace aerialqp {

/// A target reached at `time`. The transition from the previous waypoint starts at
/// time - duration; duration <= 0 uses the whole gap to the previous waypoint.
struct Waypoint {
  double time = 0.0;
  Eigen::Vector3d p_B = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  Eigen::Vector3d p_E = Eigen::Vector3d::Zero();  // base frame
  double duration = 0.0;
};

struct SetpointSchedule {
  std::vector<Waypoint> waypoints;

  /// Throws std::invalid_argument on an empty list, non-increasing times or overlong segments.
  void validate() const;
};

/// Scalar quintic blend s(tau) = 10 tau^3 - 15 tau^4 + 6 tau^5 with its first two tau-derivatives.
Eigen::Vector3d quintic_blend(double tau);

/// x_psi_d = Rz(yaw)' e1 and its time derivatives for the given yaw, yaw rate and yaw acceleration.
void yaw_direction(double yaw, double yaw_rate, double yaw_acc, Eigen::Vector3d& x, Eigen::Vector3d& x_dot,
                   Eigen::Vector3d& x_ddot);

TaskReference quintic_reference(const SetpointSchedule& schedule, double t);

/// Reference yaw angle at t (same blend as quintic_reference).
double reference_yaw(const SetpointSchedule& schedule, double t);

}  // namespace aerialqp

#endif  // AERIALQP_REFERENCE_HPP_
