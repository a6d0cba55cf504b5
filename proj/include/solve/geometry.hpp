#pragma once

#include <cstddef>
#include <vector>

#include "solve/descent.hpp"
#include "solve/generator.hpp"

namespace solve {

struct CloudDistanceReport {
  double forward_sup = 0.0;   // sup over a of distance to b
  double backward_sup = 0.0;  // sup over b of distance to a
  double hausdorff = 0.0;     // max of the two
};

struct NearestPoint {
  double distance = 0.0;
  std::size_t nearest_index = 0;
};

struct SmoothnessReport {
  double sigma_min = 0.0;    // min over the cloud of smallest singular value of dPsi
  double lambda0_hat = 0.0;  // sigma_min / 2
  std::vector<double> per_point_sigmas;
  bool rank_deficient = false;  // any per-point sigma below 1e-10
};

/// Euclidean distance to the nearest cloud point; ties to the smallest index.
NearestPoint dist_to_cloud(const Vector& x, const std::vector<Vector>& cloud);

CloudDistanceReport hausdorff(const std::vector<Vector>& a,
                              const std::vector<Vector>& b);

/// Smallest Jacobian singular value over the accepted points, and the
/// resulting curvature-constant plug-in lambda0_hat = sigma_min / 2.
SmoothnessReport estimate_smoothness(const GeneratorSpec& g, const PointCloud& cloud);

}  // namespace solve
