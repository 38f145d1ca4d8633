#include "aerialqp/sensors.hpp"

#include <cmath>
#include <stdexcept>

namespace aerialqp {

NoiseSpec NoiseSpec::disabled() {
  NoiseSpec n;
  n.gnss_sigma_pos = 0.0;
  n.gnss_sigma_vel = 0.0;
  n.encoder_bits = 0;
  n.gyro_sigma = 0.0;
  n.accel_sigma = 0.0;
  n.joint_vel_lpf_cutoff = 0.0;
  return n;
}

void NoiseSpec::validate() const {
  if (gnss_sigma_pos < 0.0) throw std::invalid_argument("noise.gnss_sigma_pos must be >= 0");
  if (gnss_sigma_vel < 0.0) throw std::invalid_argument("noise.gnss_sigma_vel must be >= 0");
  if (gyro_sigma < 0.0) throw std::invalid_argument("noise.gyro_sigma must be >= 0");
  if (accel_sigma < 0.0) throw std::invalid_argument("noise.accel_sigma must be >= 0");
  if (!(gnss_rate > 0.0)) throw std::invalid_argument("noise.gnss_rate must be > 0");
  if (encoder_bits < 0 || encoder_bits > 30) throw std::invalid_argument("noise.encoder_bits must be in [0, 30]");
}

double GaussianSource::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  double u1 = 0.0;
  do {
    u1 = static_cast<double>(engine_() >> 11) * kScale;
  } while (u1 <= 0.0);
  const double u2 = static_cast<double>(engine_() >> 11) * kScale;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Sensor::Sensor(const NoiseSpec& spec) : spec_(spec), rng_(spec.seed) { spec_.validate(); }

double Sensor::encoder_resolution() const {
  return spec_.encoder_bits > 0 ? 2.0 * M_PI / std::ldexp(1.0, spec_.encoder_bits) : 0.0;
}

SystemState Sensor::measure(const SystemState& truth, double t) {
  SystemState m = truth;
  const int n = static_cast<int>(truth.q.size());

  const auto epoch = static_cast<long long>(std::floor(t * spec_.gnss_rate + 1e-9));
  if (epoch != gnss_epoch_) {
    gnss_epoch_ = epoch;
    for (int i = 0; i < 3; ++i) pos_err_[i] = spec_.gnss_sigma_pos * rng_.next();
    for (int i = 0; i < 3; ++i) vel_err_[i] = spec_.gnss_sigma_vel * rng_.next();
  }
  m.p_B += pos_err_;
  m.nu.head<3>() += vel_err_;
  if (spec_.gyro_sigma > 0.0) {
    for (int i = 0; i < 3; ++i) m.nu[3 + i] += spec_.gyro_sigma * rng_.next();
  }

  const double res = encoder_resolution();
  if (res > 0.0) {
    for (int i = 0; i < n; ++i) m.q[i] = std::round(truth.q[i] / res) * res;
    Eigen::VectorXd qdot = truth.joint_velocity();
    if (have_prev_ && t > prev_t_) {
      const double dt = t - prev_t_;
      const Eigen::VectorXd raw = (m.q - prev_q_) / dt;
      if (spec_.joint_vel_lpf_cutoff > 0.0) {
        const double rc = 1.0 / (2.0 * M_PI * spec_.joint_vel_lpf_cutoff);
        const double alpha = dt / (dt + rc);
        qdot_filt_ += alpha * (raw - qdot_filt_);
      } else {
        qdot_filt_ = raw;
      }
      qdot = qdot_filt_;
    } else {
      qdot_filt_ = qdot;
    }
    prev_q_ = m.q;
    prev_t_ = t;
    have_prev_ = true;
    m.nu.tail(n) = qdot;
  }
  return m;
}

}  // namespace aerialqp
