#include "trisim/noise.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace trisim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Inverse Mills ratio phi(a) / (1 - Phi(a)).
double mills(double a) {
  const double tail = 0.5 * std::erfc(a / std::numbers::sqrt2);
  return kInvSqrt2Pi * std::exp(-0.5 * a * a) / tail;
}

// Coefficient of variation of N(t, 1) truncated to [0, inf).
double truncated_cv(double t) {
  const double a = -t;
  const double lam = mills(a);
  const double var = 1.0 + a * lam - lam * lam;
  return std::sqrt(std::max(var, 0.0)) / (t + lam);
}

struct Underlying {
  double mu;
  double sigma;
};

// Parameters of the parent normal whose zero-truncation has the requested
// mean and standard deviation.
Underlying fit_truncated(double mean, double stddev) {
  struct Entry {
    double mean = -1.0;
    double stddev = -1.0;
    Underlying fit{0.0, 0.0};
  };
  thread_local std::array<Entry, 4> cache;
  thread_local std::size_t next_slot = 0;
  for (const Entry& e : cache) {
    if (e.mean == mean && e.stddev == stddev) return e.fit;
  }

  const double target = stddev / mean;
  // truncated_cv is decreasing in t; t in [-30, 60] spans cv in (1, ~0.017).
  double lo = -30.0;
  double hi = 60.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (truncated_cv(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double t = 0.5 * (lo + hi);
  const double sigma = mean / (t + mills(-t));
  Entry& slot = cache[next_slot];
  next_slot = (next_slot + 1) % cache.size();
  slot = Entry{mean, stddev, {t * sigma, sigma}};
  return slot.fit;
}

double truncated_magnitude(double mean, double stddev, Rng& rng) {
  if (stddev <= 0.0) return mean;
  const Underlying u = fit_truncated(mean, stddev);
  for (;;) {
    const double m = rng.normal(u.mu, u.sigma);
    if (m >= 0.0) return m;
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index, std::uint64_t stream_id) {
  return splitmix64(splitmix64(splitmix64(master_seed) ^ run_index) ^ stream_id);
}

void VertexErrorModel::validate() const {
  if (mu_lat < 0.0 || sigma_lat < 0.0 || mu_lon < 0.0 || sigma_lon < 0.0) {
    throw std::invalid_argument("vertex error model parameters must be non-negative");
  }
  // A non-negative magnitude cannot have std >= mean under the truncated
  // normal family, nor a zero mean with non-zero spread.
  if ((sigma_lat > 0.0 && !(sigma_lat < mu_lat)) || (sigma_lon > 0.0 && !(sigma_lon < mu_lon))) {
    throw std::invalid_argument("vertex error magnitude std must be smaller than its mean");
  }
}

void HeadingErrorParams::validate() const {
  if (!(tau > 0.0) || !(gyro_bias_tau > 0.0)) {
    throw std::invalid_argument("heading error correlation times must be positive");
  }
  if (sigma_gm < 0.0 || sigma_white < 0.0 || gyro_bias_sigma < 0.0) {
    throw std::invalid_argument("heading error standard deviations must be non-negative");
  }
}

void WssParams::validate() const {
  if (!(wheel_radius + radius_bias > 0.0)) {
    throw std::invalid_argument("effective wheel radius must be positive");
  }
  if (noise_std < 0.0) {
    throw std::invalid_argument("wheel speed noise must be non-negative");
  }
}

VertexError sample_vertex_error(const VertexErrorModel& model, Rng& rng) {
  VertexError e;
  e.lateral = rng.sign() * truncated_magnitude(model.mu_lat, model.sigma_lat, rng);
  e.longitudinal = rng.sign() * truncated_magnitude(model.mu_lon, model.sigma_lon, rng);
  return e;
}

double gm_step(double prev_err, double dt, double tau, double sigma, Rng& rng) {
  const double a = std::exp(-dt / tau);
  const double q = sigma * std::sqrt(1.0 - std::exp(-2.0 * dt / tau));
  return a * prev_err + rng.normal(0.0, q);
}

double gm_step(double prev_err, double dt, const HeadingErrorParams& params, Rng& rng) {
  return gm_step(prev_err, dt, params.tau, params.sigma_gm, rng);
}

double read_heading_error(double gm_state, const HeadingErrorParams& params, Rng& rng) {
  return gm_state + rng.normal(0.0, params.sigma_white);
}

double wss_measure(double omega_wheel, const WssParams& params, Rng& rng) {
  return params.nominal_speed(omega_wheel) + rng.normal(0.0, params.noise_std);
}

ErrorStats error_stats(std::span<const double> e_x, std::span<const double> e_y) {
  if (e_x.size() != e_y.size()) {
    throw StatsError("error sample lists differ in length");
  }
  const std::size_t n = e_x.size();
  if (n < 2) {
    throw StatsError("at least two samples are required for a standard deviation");
  }
  ErrorStats s;
  s.n = n;
  for (std::size_t i = 0; i < n; ++i) {
    s.mu_x += e_x[i];
    s.mu_y += e_y[i];
  }
  s.mu_x /= double(n);
  s.mu_y /= double(n);
  double ss_x = 0.0;
  double ss_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ss_x += (e_x[i] - s.mu_x) * (e_x[i] - s.mu_x);
    ss_y += (e_y[i] - s.mu_y) * (e_y[i] - s.mu_y);
  }
  s.sigma_x = std::sqrt(ss_x / double(n - 1));
  s.sigma_y = std::sqrt(ss_y / double(n - 1));
  return s;
}

}  // namespace trisim
