#include "subhess/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "subhess/error.hpp"

namespace subhess {

Domain Domain::box(std::vector<double> lo, std::vector<double> hi, double shell_width) {
  if (lo.empty() || lo.size() != hi.size()) throw DimensionMismatch("box corners must be non-empty and of equal length");
  Domain d;
  d.shape_ = Shape::box;
  d.center_.resize(lo.size());
  d.radius_ = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(hi[i] > lo[i])) throw RejectedInput("box axis " + std::to_string(i + 1) + " has non-positive length");
    d.center_[i] = 0.5 * (lo[i] + hi[i]);
    d.radius_ = std::min(d.radius_, 0.5 * (hi[i] - lo[i]));
  }
  d.lo_ = std::move(lo);
  d.hi_ = std::move(hi);
  d.shell_width_ = shell_width;
  d.validate();
  return d;
}

Domain Domain::ball(std::vector<double> center, double radius, double shell_width) {
  if (center.empty()) throw DimensionMismatch("ball center must be non-empty");
  if (!(radius > 0)) throw RejectedInput("ball radius must be positive");
  Domain d;
  d.shape_ = Shape::ball;
  d.radius_ = radius;
  d.lo_ = center;
  d.hi_ = center;
  for (std::size_t i = 0; i < center.size(); ++i) {
    d.lo_[i] -= radius;
    d.hi_[i] += radius;
  }
  d.center_ = std::move(center);
  d.shell_width_ = shell_width;
  d.validate();
  return d;
}

Domain Domain::cube(std::vector<double> center, double half_width, double shell_width) {
  std::vector<double> lo = center, hi = center;
  for (std::size_t i = 0; i < center.size(); ++i) {
    lo[i] -= half_width;
    hi[i] += half_width;
  }
  return box(std::move(lo), std::move(hi), shell_width);
}

void Domain::validate() const {
  if (shell_width_ < 0 || !(shell_width_ < radius_))
    throw RejectedInput("boundary shell width must be non-negative and below the inradius");
}

double Domain::volume() const {
  if (shape_ == Shape::box) {
    double v = 1.0;
    for (std::size_t i = 0; i < lo_.size(); ++i) v *= hi_[i] - lo_[i];
    return v;
  }
  const double n = static_cast<double>(dimension());
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0) * std::pow(radius_, n);
}

double Domain::depth(std::span<const double> x) const {
  if (x.size() != dimension()) throw DimensionMismatch("point dimension does not match domain");
  if (shape_ == Shape::ball) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) r2 += (x[i] - center_[i]) * (x[i] - center_[i]);
    return radius_ - std::sqrt(r2);
  }
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) d = std::min({d, x[i] - lo_[i], hi_[i] - x[i]});
  return d;
}

bool Domain::contains(std::span<const double> x) const { return depth(x) >= 0.0; }

Domain Domain::inset(double d) const {
  if (!(d < radius_)) throw RejectedInput("inset exhausts the domain");
  if (shape_ == Shape::ball) return ball(center_, radius_ - d);
  std::vector<double> lo = lo_, hi = hi_;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    lo[i] += d;
    hi[i] -= d;
  }
  return box(std::move(lo), std::move(hi));
}

}  // namespace subhess
