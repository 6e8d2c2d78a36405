#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "ltrc/errors.hpp"
#include "ltrc/numerics.hpp"
#include "ltrc/random.hpp"

namespace ltrc {

/// Raised when an adaptive rejection sampler meets evidence that its target
/// is not log-concave (a tangent below the density, or increasing slopes).
class not_log_concave : public error {
 public:
  using error::error;
};

/// Log-density value and first derivative at a point.
struct LogDensityPoint {
  double value;
  double slope;
};

/// Derivative-based adaptive rejection sampler for a log-concave density on
/// (lower, upper). The upper hull is built from tangents, the squeeze from
/// chords; every density evaluation that does not accept via the squeeze
/// refines the hull.
///
/// `LogDensity` is callable as `LogDensityPoint(double)`.
template <class LogDensity>
class AdaptiveRejectionSampler {
 public:
  AdaptiveRejectionSampler(LogDensity f, std::span<const double> initial, double lower = 0.0,
                           double upper = numerics::kInf, std::size_t max_points = 64)
      : f_(std::move(f)), lower_(lower), upper_(upper), max_points_(max_points) {
    if (initial.size() < 2) throw domain_error("adaptive rejection sampling needs two starting points");
    std::vector<double> xs(initial.begin(), initial.end());
    std::sort(xs.begin(), xs.end());
    for (double x : xs) {
      if (!(x > lower_ && x < upper_)) throw domain_error("starting point outside the support");
      const LogDensityPoint p = f_(x);
      if (!std::isfinite(p.value) || !std::isfinite(p.slope)) throw domain_error("log-density not finite at a starting point");
      pts_.push_back({x, p.value, p.slope});
    }
    if (upper_ == numerics::kInf && !(pts_.back().dh < 0.0)) {
      throw domain_error("rightmost starting point must have negative slope");
    }
    if (lower_ == -numerics::kInf && !(pts_.front().dh > 0.0)) {
      throw domain_error("leftmost starting point must have positive slope");
    }
    check_slopes();
    rebuild();
  }

  double operator()(Rng& rng) {
    for (;;) {
      const double x = sample_hull(rng);
      const double log_w = std::log(uniform_open(rng));
      const double up = hull_at(x);
      if (log_w <= squeeze_at(x) - up) return x;
      const LogDensityPoint p = f_(x);
      ++evaluations_;
      if (p.value > up + 1e-8 * std::max(1.0, std::abs(up))) {
        throw not_log_concave("log-density exceeds its tangent envelope");
      }
      const bool accept = log_w <= p.value - up;
      if (pts_.size() < max_points_ && std::isfinite(p.value) && std::isfinite(p.slope)) insert({x, p.value, p.slope});
      if (accept) return x;
    }
  }

  std::size_t evaluations() const { return evaluations_; }
  std::size_t abscissae() const { return pts_.size(); }

 private:
  struct Point {
    double x, h, dh;
  };

  void check_slopes() const {
    for (std::size_t k = 1; k < pts_.size(); ++k) {
      const double tol = 1e-9 * std::max({1.0, std::abs(pts_[k].dh), std::abs(pts_[k - 1].dh)});
      if (pts_[k].dh > pts_[k - 1].dh + tol) throw not_log_concave("tangent slopes increase");
    }
  }

  void insert(const Point& p) {
    auto it = std::lower_bound(pts_.begin(), pts_.end(), p.x, [](const Point& a, double x) { return a.x < x; });
    if (it != pts_.end() && it->x == p.x) return;
    pts_.insert(it, p);
    check_slopes();
    rebuild();
  }

  // Intersections z_k of tangents k and k+1, and log masses of each hull piece.
  void rebuild() {
    const std::size_t K = pts_.size();
    z_.assign(K + 1, 0.0);
    z_[0] = lower_;
    z_[K] = upper_;
    for (std::size_t k = 0; k + 1 < K; ++k) {
      const Point& a = pts_[k];
      const Point& b = pts_[k + 1];
      const double ds = a.dh - b.dh;
      double z;
      if (ds <= 1e-12 * std::max(std::abs(a.dh), 1.0)) {
        z = 0.5 * (a.x + b.x);
      } else {
        z = (b.h - a.h - b.x * b.dh + a.x * a.dh) / ds;
        z = std::clamp(z, a.x, b.x);
      }
      z_[k + 1] = z;
    }
    log_mass_.assign(K, 0.0);
    double top = -numerics::kInf;
    for (std::size_t k = 0; k < K; ++k) {
      log_mass_[k] = piece_log_mass(k);
      top = std::max(top, log_mass_[k]);
    }
    cum_.assign(K, 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      acc += std::exp(log_mass_[k] - top);
      cum_[k] = acc;
    }
  }

  double piece_log_mass(std::size_t k) const {
    const Point& p = pts_[k];
    const double a = z_[k], b = z_[k + 1];
    if (!(b > a)) return -numerics::kInf;
    if (b == numerics::kInf) return p.h + p.dh * (a - p.x) - std::log(-p.dh);
    if (a == -numerics::kInf) return p.h + p.dh * (b - p.x) - std::log(p.dh);
    const double L = b - a;
    const double s = p.dh;
    if (std::abs(s * L) < 1e-12) return p.h + s * (0.5 * (a + b) - p.x) + std::log(L);
    // log of integral of exp(h + s (x - x_k)) over [a, b], from the higher end
    if (s > 0.0) return p.h + s * (b - p.x) + std::log(-std::expm1(-s * L)) - std::log(s);
    return p.h + s * (a - p.x) + std::log(-std::expm1(s * L)) - std::log(-s);
  }

  double sample_hull(Rng& rng) const {
    const double u = uniform_open(rng) * cum_.back();
    const std::size_t k = static_cast<std::size_t>(std::lower_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
    const std::size_t j = std::min(k, cum_.size() - 1);
    const Point& p = pts_[j];
    const double a = z_[j], b = z_[j + 1];
    const double v = uniform_open(rng);
    const double s = p.dh;
    if (b == numerics::kInf) return a + std::log(v) / s;
    if (a == -numerics::kInf) return b + std::log(v) / s;
    const double L = b - a;
    if (std::abs(s * L) < 1e-12) return a + v * L;
    if (s > 0.0) return std::clamp(b + std::log(v + (1.0 - v) * std::exp(-s * L)) / s, a, b);
    return std::clamp(a + std::log(v + (1.0 - v) * std::exp(s * L)) / s, a, b);
  }

  std::size_t piece_of(double x) const {
    const auto it = std::upper_bound(z_.begin() + 1, z_.end() - 1, x);
    return static_cast<std::size_t>(it - (z_.begin() + 1));
  }

  double hull_at(double x) const {
    const Point& p = pts_[piece_of(x)];
    return p.h + p.dh * (x - p.x);
  }

  double squeeze_at(double x) const {
    if (x < pts_.front().x || x > pts_.back().x) return -numerics::kInf;
    auto it = std::upper_bound(pts_.begin(), pts_.end(), x, [](double v, const Point& a) { return v < a.x; });
    if (it == pts_.end()) return pts_.back().h;
    const Point& r = *it;
    const Point& l = *(it - 1);
    return l.h + (r.h - l.h) * (x - l.x) / (r.x - l.x);
  }

  LogDensity f_;
  double lower_, upper_;
  std::size_t max_points_;
  std::vector<Point> pts_;
  std::vector<double> z_, log_mass_, cum_;
  std::size_t evaluations_ = 0;
};

/// Inverse-CDF sampling from a log-density tabulated on a grid, with the
/// density linear between nodes. Used when log-concavity cannot be certified.
class GridInversionSampler {
 public:
  GridInversionSampler(std::vector<double> xs, std::span<const double> log_density) : xs_(std::move(xs)) {
    if (xs_.size() < 2 || xs_.size() != log_density.size()) throw domain_error("grid sampler needs matching grids");
    const double top = *std::max_element(log_density.begin(), log_density.end());
    if (!std::isfinite(top)) throw domain_error("grid sampler: log-density has no finite maximum");
    dens_.resize(xs_.size());
    for (std::size_t i = 0; i < xs_.size(); ++i) dens_[i] = std::exp(log_density[i] - top);
    cum_.assign(xs_.size(), 0.0);
    for (std::size_t i = 1; i < xs_.size(); ++i) {
      cum_[i] = cum_[i - 1] + 0.5 * (dens_[i] + dens_[i - 1]) * (xs_[i] - xs_[i - 1]);
    }
  }

  double operator()(Rng& rng) const {
    const double u = uniform_open(rng) * cum_.back();
    std::size_t i = static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
    i = std::clamp<std::size_t>(i, 1, xs_.size() - 1);
    // Solve for x in the cell where the trapezoid mass reaches u.
    const double x0 = xs_[i - 1], w = xs_[i] - x0;
    const double f0 = dens_[i - 1], f1 = dens_[i];
    const double r = u - cum_[i - 1];
    const double slope = (f1 - f0) / w;
    double dx;
    if (std::abs(slope) * w < 1e-12 * std::max(f0, 1e-300)) {
      dx = f0 > 0.0 ? r / f0 : 0.5 * w;
    } else {
      const double disc = std::max(f0 * f0 + 2.0 * slope * r, 0.0);
      dx = (std::sqrt(disc) - f0) / slope;
    }
    return x0 + std::clamp(dx, 0.0, w);
  }

 private:
  std::vector<double> xs_, dens_, cum_;
};

}  // namespace ltrc
