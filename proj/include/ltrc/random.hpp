#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace ltrc {

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace detail

/// Seed for the stream named (component, index) under a master seed. Streams
/// are independent of scheduling, so parallel replicates stay reproducible.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view component, std::uint64_t index = 0) {
  std::uint64_t h = detail::splitmix64(seed ^ detail::fnv1a(component));
  return detail::splitmix64(h ^ detail::splitmix64(index + 0x632BE59BD9B4E019ULL));
}

inline Rng make_rng(std::uint64_t seed, std::string_view component, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, component, index));
}

/// Uniform on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Weibull(alpha, lambda) with survival exp(-lambda x^alpha).
inline double weibull_draw(double alpha, double lambda, Rng& rng) {
  return std::pow(-std::log(uniform_open(rng)) / lambda, 1.0 / alpha);
}

/// Weibull(alpha, lambda) conditioned on exceeding `tau`, by inversion.
inline double weibull_draw_above(double alpha, double lambda, double tau, Rng& rng) {
  if (!(tau > 0.0)) return weibull_draw(alpha, lambda, rng);
  const double e = -std::log(uniform_open(rng)) / lambda;
  return std::pow(std::pow(tau, alpha) + e, 1.0 / alpha);
}

/// Gamma with the given shape and rate.
inline double gamma_draw(double shape, double rate, Rng& rng) {
  std::gamma_distribution<double> g(shape, 1.0 / rate);
  return g(rng);
}

inline double beta_draw(double a, double b, Rng& rng) {
  const double x = gamma_draw(a, 1.0, rng);
  const double y = gamma_draw(b, 1.0, rng);
  return x / (x + y);
}

}  // namespace ltrc
