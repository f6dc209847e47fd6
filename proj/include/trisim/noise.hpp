#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace trisim {

class StatsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Seeded random stream. One instance per robot per run; never shared
/// between threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal(double mean, double stddev) {
    if (stddev <= 0.0) return mean;
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  /// -1 or +1 with equal probability.
  double sign() { return (engine_() >> 63) != 0u ? 1.0 : -1.0; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Deterministic seed for (master seed, run, stream); streams are e.g.
/// robot ids or named sub-streams.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index, std::uint64_t stream_id);

/// Vertex placement error statistics (magnitudes, meters).
struct VertexErrorModel {
  double mu_lat = 0.036;
  double sigma_lat = 0.021;
  double mu_lon = 0.013;
  double sigma_lon = 0.009;

  void validate() const;
  bool operator==(const VertexErrorModel&) const = default;
};

/// First-order Gauss-Markov heading error plus white read noise.
///
/// The gyro_bias_* terms model the integrated rate bias of the MEMS gyro used
/// by the dead-reckoning baseline: the heading estimate drifts by the
/// integral of a Gauss-Markov rate bias with correlation time gyro_bias_tau.
struct HeadingErrorParams {
  double tau = 120.0;
  double sigma_gm = 0.043633231299858237;     // 2.5 deg
  double sigma_white = 0.013962634015954637;  // 0.8 deg
  double gyro_bias_tau = 120.0;
  double gyro_bias_sigma = 0.017453292519943295;  // 1 deg/s

  void validate() const;
  bool operator==(const HeadingErrorParams&) const = default;
};

/// Wheel speed sensor model: v = (R + eps_R)(1 + SF) * omega_wheel + n.
struct WssParams {
  double wheel_radius = 0.148;
  double radius_bias = 0.0;
  double scale_factor = 0.16;
  double noise_std = 0.045;

  void validate() const;
  /// Noise-free speed for a given wheel rate.
  double nominal_speed(double omega_wheel) const {
    return (wheel_radius + radius_bias) * (1.0 + scale_factor) * omega_wheel;
  }
  bool operator==(const WssParams&) const = default;
};

struct NoiseModels {
  VertexErrorModel vertex;
  HeadingErrorParams heading;
  WssParams wss;
  bool operator==(const NoiseModels&) const = default;
};

struct ErrorStats {
  double mu_x = 0.0;
  double mu_y = 0.0;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  std::size_t n = 0;
};

struct VertexError {
  double lateral = 0.0;
  double longitudinal = 0.0;
};

/// Per axis: magnitude from a zero-truncated normal (rejection sampled) whose
/// mean and standard deviation equal the model's mu and sigma, times an
/// independent uniform random sign.
VertexError sample_vertex_error(const VertexErrorModel& model, Rng& rng);

/// Exact discretisation of the Gauss-Markov process over one step of `dt`.
double gm_step(double prev_err, double dt, double tau, double sigma, Rng& rng);
double gm_step(double prev_err, double dt, const HeadingErrorParams& params, Rng& rng);

/// Measured heading error: the Gauss-Markov state plus white read noise.
double read_heading_error(double gm_state, const HeadingErrorParams& params, Rng& rng);

double wss_measure(double omega_wheel, const WssParams& params, Rng& rng);

/// Sample means and (N-1)-denominator standard deviations per axis.
ErrorStats error_stats(std::span<const double> e_x, std::span<const double> e_y);

}  // namespace trisim
