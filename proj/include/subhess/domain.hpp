#pragma once

#include <span>
#include <vector>

namespace subhess {

// Axis box or Euclidean ball with a boundary shell of the given width.
class Domain {
 public:
  enum class Shape { box, ball };

  static Domain box(std::vector<double> lo, std::vector<double> hi, double shell_width = 0.0);
  static Domain ball(std::vector<double> center, double radius, double shell_width = 0.0);
  // Centered cube [c - half, c + half]^n.
  static Domain cube(std::vector<double> center, double half_width, double shell_width = 0.0);

  Shape shape() const { return shape_; }
  std::size_t dimension() const { return lo_.size(); }
  // Bounding box corners; equal to the box itself for Shape::box.
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  const std::vector<double>& center() const { return center_; }
  // Ball radius; for boxes, half the shortest side.
  double radius() const { return radius_; }
  double shell_width() const { return shell_width_; }

  double volume() const;
  double inradius() const { return radius_; }
  bool contains(std::span<const double> x) const;
  // Distance from x to the complement, negative outside.
  double depth(std::span<const double> x) const;
  // The domain shrunk by d on every side.
  Domain inset(double d) const;

 private:
  Domain() = default;
  void validate() const;

  Shape shape_ = Shape::box;
  std::vector<double> lo_, hi_, center_;
  double radius_ = 0.0;
  double shell_width_ = 0.0;
};

}  // namespace subhess
