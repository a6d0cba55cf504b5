#include "solve/geometry.hpp"

#include <algorithm>

namespace solve {

NearestPoint dist_to_cloud(const Vector& x, const std::vector<Vector>& cloud) {
  if (cloud.empty()) {
    throw EmptyCloud("dist_to_cloud: empty cloud");
  }
  NearestPoint best{(x - cloud[0]).norm(), 0};
  for (std::size_t i = 1; i < cloud.size(); ++i) {
    const double d = (x - cloud[i]).norm();
    if (d < best.distance) {
      best.distance = d;
      best.nearest_index = i;
    }
  }
  return best;
}

CloudDistanceReport hausdorff(const std::vector<Vector>& a,
                              const std::vector<Vector>& b) {
  if (a.empty() || b.empty()) {
    throw EmptyCloud("hausdorff: both clouds must be nonempty");
  }
  CloudDistanceReport rep;
  for (const auto& x : a) {
    rep.forward_sup = std::max(rep.forward_sup, dist_to_cloud(x, b).distance);
  }
  for (const auto& y : b) {
    rep.backward_sup = std::max(rep.backward_sup, dist_to_cloud(y, a).distance);
  }
  rep.hausdorff = std::max(rep.forward_sup, rep.backward_sup);
  return rep;
}

SmoothnessReport estimate_smoothness(const GeneratorSpec& g, const PointCloud& cloud) {
  if (cloud.points.empty()) {
    throw EmptyCloud("estimate_smoothness: empty cloud");
  }
  SmoothnessReport rep;
  rep.per_point_sigmas.reserve(cloud.points.size());
  for (const auto& x : cloud.points) {
    Matrix jac = eval_jacobian(g, x);
    Eigen::JacobiSVD<Matrix> svd(jac);
    const double sigma = svd.singularValues().minCoeff();
    rep.per_point_sigmas.push_back(sigma);
    if (sigma < 1e-10) rep.rank_deficient = true;
  }
  rep.sigma_min = *std::min_element(rep.per_point_sigmas.begin(),
                                    rep.per_point_sigmas.end());
  rep.lambda0_hat = rep.sigma_min / 2.0;
  return rep;
}

}  // namespace solve
