#ifndef AERIALQP_SENSORS_HPP_
#define AERIALQP_SENSORS_HPP_

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "aerialqp/kinematics.hpp"

namespace aerialqp {

struct NoiseSpec {
  double gnss_sigma_pos = 0.02;    // m
  double gnss_sigma_vel = 0.05;    // m/s
  double gnss_rate = 10.0;         // Hz
  int encoder_bits = 12;           // 0 disables quantization and velocity differencing
  double gyro_sigma = 6.9e-4;      // rad/s per sample
  double accel_sigma = 9.7e-3;     // m/s^2; carried for completeness, base acceleration is not measured
  double joint_vel_lpf_cutoff = 20.0;  // Hz; <= 0 disables the filter
  std::uint64_t seed = 1;

  /// All noise sources off: measure() returns the true state.
  static NoiseSpec disabled();
  void validate() const;
};

/// Standard normal samples from a 64-bit Mersenne Twister through the Box-Muller transform.
/// The stream depends only on the seed.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}
  double next();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Noise and quantization model over the true state. GNSS position/velocity errors are redrawn
/// at the GNSS rate and held in between; gyro noise is white per call; joint angles are quantized
/// and their rates rebuilt by finite differences plus a single-pole low-pass.
class Sensor {
 public:
  explicit Sensor(const NoiseSpec& spec);
  SystemState measure(const SystemState& truth, double t);

  [[nodiscard]] double encoder_resolution() const;

 private:
  NoiseSpec spec_;
  GaussianSource rng_;
  long long gnss_epoch_ = -1;
  Eigen::Vector3d pos_err_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d vel_err_ = Eigen::Vector3d::Zero();
  bool have_prev_ = false;
  double prev_t_ = 0.0;
  Eigen::VectorXd prev_q_;
  Eigen::VectorXd qdot_filt_;
};

}  // namespace aerialqp

#endif  // AERIALQP_SENSORS_HPP_
