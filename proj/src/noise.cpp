#include "ldp/noise.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

namespace ldp {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

AlphaStableParams::AlphaStableParams(double a) : alpha(a) {
  if (!(a > 1.0 && a < 2.0)) {
    throw std::invalid_argument("AlphaStableParams: alpha must lie in (1, 2), got " +
                                std::to_string(a));
  }
}

NoiseScale::NoiseScale(double n_, double gamma_) : n(n_), gamma(gamma_) {
  if (!(n >= 2.0)) {
    throw std::invalid_argument("NoiseScale: n must be >= 2, got " + std::to_string(n_));
  }
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("NoiseScale: gamma must be > 0, got " +
                                std::to_string(gamma_));
  }
}

NoiseScale NoiseScale::noiseless() {
  NoiseScale s(2.0, 1.0);
  s.brownian_enabled = false;
  s.stable_enabled = false;
  return s;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), key_(mix64(seed ^ mix64(stream_id + kGolden))) {}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform01() {
  // 53 random bits, shifted into (0, 1).
  return (next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

double RngStream::normal() {
  const double u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::stable(double alpha) {
  const double theta = std::numbers::pi * (uniform01() - 0.5);
  const double e = -std::log(uniform01());
  const double at = alpha * theta;
  return std::sin(at) / std::pow(std::cos(theta), 1.0 / alpha) *
         std::pow(std::cos(theta - at) / e, (1.0 - alpha) / alpha);
}

std::vector<double> sample_gaussian_increment(double dt, int dim, RngStream& rng) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("sample_gaussian_increment: dt must be > 0");
  }
  if (dim < 1) {
    throw std::invalid_argument("sample_gaussian_increment: dim must be >= 1");
  }
  std::vector<double> out(static_cast<std::size_t>(dim));
  const double s = std::sqrt(dt);
  for (auto& x : out) x = s * rng.normal();
  return out;
}

std::vector<double> sample_stable_increment(const AlphaStableParams& params, double dt,
                                            int dim, RngStream& rng) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("sample_stable_increment: dt must be > 0");
  }
  if (dim < 1) {
    throw std::invalid_argument("sample_stable_increment: dim must be >= 1");
  }
  std::vector<double> out(static_cast<std::size_t>(dim));
  const double s = std::pow(dt, 1.0 / params.alpha);
  for (auto& x : out) x = s * rng.stable(params.alpha);
  return out;
}

}  // namespace ldp
