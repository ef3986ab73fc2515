#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace ldp {

/// Stability index of the driving symmetric stable process, restricted to (1, 2).
struct AlphaStableParams {
  double alpha;
  explicit AlphaStableParams(double a);
};

/// Scale pair (n, gamma) with the derived noise amplitudes
///   a_n = (log n)^{-1/2}   (Brownian part)
///   b_n = n^{-gamma}       (stable part)
/// and the speed log n used throughout the slope fits.
///
/// n is kept as a real >= 2 so that experiments can pin a_n exactly
/// (e.g. n = e^4 gives a_n = 1/2); integer grids are the common case.
struct NoiseScale {
  double n;
  double gamma;
  bool brownian_enabled = true;
  bool stable_enabled = true;

  NoiseScale(double n_, double gamma_);

  double rate() const { return std::log(n); }
  double a_n() const { return brownian_enabled ? 1.0 / std::sqrt(rate()) : 0.0; }
  double b_n() const { return stable_enabled ? std::pow(n, -gamma) : 0.0; }

  /// Both noise sources switched off; used for deterministic-limit checks.
  static NoiseScale noiseless();
};

/// Counter-based stream: state is (key, counter), output is the splitmix64
/// finalizer applied to the counter walk. Equal (seed, stream_id) pairs give
/// bit-identical sequences; distinct stream_ids give decorrelated keys, so one
/// stream per worker (or per trial) is safe.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform01();
  /// Standard normal via Box-Muller (one uniform pair per draw).
  double normal();
  /// Standard symmetric alpha-stable, CF exp(-|theta|^alpha),
  /// Chambers-Mallows-Stuck transform.
  double stable(double alpha);

  std::uint64_t seed_value() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Brownian increment over dt: dim i.i.d. Normal(0, dt) components.
std::vector<double> sample_gaussian_increment(double dt, int dim, RngStream& rng);

/// Stable increment over dt: dim i.i.d. copies of dt^{1/alpha} * S with S
/// standard symmetric alpha-stable.
std::vector<double> sample_stable_increment(const AlphaStableParams& params, double dt,
                                            int dim, RngStream& rng);

}  // namespace ldp
