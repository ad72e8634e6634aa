#pragma once

// Carnot-Caratheodory distance estimates from feasible sub-unitary paths,
// Monte Carlo ball volumes and the homogeneous-dimension fit.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "subhess/exponents.hpp"
#include "subhess/fields.hpp"

namespace subhess {

struct CCBudget {
  std::size_t segments = 32;
  std::size_t restarts = 8;
  std::size_t iterations = 100;
  // RK4 steps per control segment.
  std::size_t substeps = 1;
  // Bisection stops when (T_hi - T_lo) <= rel_tol * T_hi.
  double rel_tol = 1e-3;
  std::size_t max_doublings = 20;
  std::uint64_t seed = 1;

  // The cheaper budget used for ball membership tests.
  static CCBudget coarse();
};

// gamma' = sum_i c_i X_i(gamma) with |c| <= 1 on each of the equal segments.
struct CCPath {
  double T = 0.0;
  std::vector<std::vector<double>> nodes;     // segments + 1 points
  std::vector<std::vector<double>> controls;  // segments x m
  double endpoint_error = 0.0;
};

struct CCDistance {
  // Upper estimate of d(x, y): the horizon of the best feasible path found.
  double T = 0.0;
  // Largest horizon found infeasible; 0 if none was.
  double T_infeasible = 0.0;
  CCPath path;
};

// Endpoint tolerance for reaching y: 1e-3 (1 + |y|).
double reach_tolerance(std::span<const double> y);

// Throws UnreachableWithinBudget if no feasible horizon is found.
CCDistance cc_distance(const FieldSystem& s, std::span<const double> x, std::span<const double> y,
                       const CCBudget& budget = {});

// Whether a feasible path of horizon T from x to y is found.
bool cc_reachable(const FieldSystem& s, std::span<const double> x, std::span<const double> y, double T,
                  const CCBudget& budget);

// Re-integrates the controls with `substeps` RK4 steps per segment and
// returns the distance of the endpoint from y.
double path_endpoint_error(const FieldSystem& s, const CCPath& path, std::span<const double> y, std::size_t substeps);

void write_path_csv(std::ostream& out, const CCPath& path);

struct VolumeOptions {
  std::size_t samples = 2000;
  std::uint64_t seed = 1;
  CCBudget budget = CCBudget::coarse();
  // Random and circling control sequences used to size the bounding box.
  std::size_t explore_paths = 512;
  std::size_t max_enlargements = 4;
};

struct VolumeEstimate {
  double R = 0.0;
  double volume = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::size_t inside = 0;
  std::vector<double> box_lo, box_hi;
  std::size_t enlargements = 0;
  std::vector<std::string> log;
};

// Requires R > 0 and at least 1000 samples.
VolumeEstimate ball_volume(const FieldSystem& s, std::span<const double> x, double R, const VolumeOptions& options = {});

struct HomogeneousDimension {
  std::vector<VolumeEstimate> volumes;
  double Q_fit = 0.0;
  int Q_ceil = 0;
  bool doubling_ok = false;
  // "ok" or "inconclusive" (too few hits or too large a relative error).
  std::string status;
};

// Least-squares slope of log |B_R| against log R; the doubling check uses
// C = 1 and Q = ceil(Q_fit) on consecutive radii, allowing three combined
// Monte Carlo standard errors. Requires >= 3 increasing radii spanning a factor >= 4.
HomogeneousDimension homogeneous_dimension(const FieldSystem& s, std::span<const double> x,
                                           const std::vector<double>& radii, const VolumeOptions& options = {});

}  // namespace subhess
