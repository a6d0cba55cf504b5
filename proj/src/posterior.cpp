#include "solve/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace solve {

std::vector<double> WeightedPointCloud::normalized_weights() const {
  const double m = *std::max_element(log_omega.begin(), log_omega.end());
  std::vector<double> w(log_omega.size());
  double total = 0.0;
  for (std::size_t i = 0; i < log_omega.size(); ++i) {
    w[i] = std::exp(log_omega[i] - m);
    total += w[i];
  }
  for (auto& wi : w) wi /= total;
  return w;
}

std::vector<double> density_scores(const std::vector<Vector>& points, double h) {
  if (h <= 0.0) {
    throw NonPositiveBandwidth("density_scores requires h > 0");
  }
  if (points.empty()) {
    throw EmptyCloud("density_scores: empty cloud");
  }
  const std::size_t n = points.size();
  std::vector<double> rho(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double u = (points[i] - points[j]).norm() / h;
      acc += std::exp(-0.5 * u * u);
    }
    rho[i] = acc / static_cast<double>(n);
  }
  return rho;
}

double silverman_bandwidth(const std::vector<Vector>& points) {
  const std::size_t n = points.size();
  if (n < 2) {
    throw DegenerateCloud("silverman_bandwidth needs at least two points");
  }
  const auto d = points[0].size();
  Vector mean = Vector::Zero(d);
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(n);
  double sigma_bar = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    double ss = 0.0;
    for (const auto& p : points) ss += (p[j] - mean[j]) * (p[j] - mean[j]);
    sigma_bar += std::sqrt(ss / static_cast<double>(n - 1));
  }
  sigma_bar /= static_cast<double>(d);
  if (sigma_bar == 0.0) {
    throw DegenerateCloud("silverman_bandwidth: zero spread");
  }
  const double dd = static_cast<double>(d);
  return sigma_bar *
         std::pow(4.0 / ((dd + 2.0) * static_cast<double>(n)), 1.0 / (dd + 4.0));
}

WeightedPointCloud posterior_weights(const std::vector<Vector>& points,
                                     const PriorSpec& prior,
                                     const std::function<double(const Vector&)>& loglik,
                                     double h) {
  WeightedPointCloud w;
  w.points = points;
  w.bandwidth = h;
  w.rho = density_scores(points, h);
  w.log_pi.resize(points.size());
  w.log_omega.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double lp = prior.log_score(points[i]);
    if (loglik) lp += loglik(points[i]);
    if (!std::isfinite(lp)) {
      throw NonFiniteScore("non-finite posterior score at point " + std::to_string(i), i);
    }
    w.log_pi[i] = lp;
    w.log_omega[i] = lp - std::log(w.rho[i]);
  }
  return w;
}

Vector posterior_mean(const WeightedPointCloud& w) {
  if (w.points.empty()) {
    throw EmptyCloud("posterior_mean: empty cloud");
  }
  const std::vector<double> wts = w.normalized_weights();
  Vector mean = Vector::Zero(w.points[0].size());
  for (std::size_t i = 0; i < w.points.size(); ++i) {
    mean += wts[i] * w.points[i];
  }
  return mean;
}

IndexedPoint map_estimate(const WeightedPointCloud& w) {
  if (w.points.empty()) {
    throw EmptyCloud("map_estimate: empty cloud");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < w.log_pi.size(); ++i) {
    if (w.log_pi[i] > w.log_pi[best]) best = i;
  }
  return IndexedPoint{w.points[best], best};
}

IndexedPoint frechet_mean(const WeightedPointCloud& w) {
  if (w.points.empty()) {
    throw EmptyCloud("frechet_mean: empty cloud");
  }
  const std::vector<double> wts = w.normalized_weights();
  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.points.size(); ++i) {
    double cost = 0.0;
    for (std::size_t j = 0; j < w.points.size(); ++j) {
      cost += wts[j] * (w.points[i] - w.points[j]).squaredNorm();
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = i;
    }
  }
  return IndexedPoint{w.points[best], best};
}

CredibleRegion credible_region(const WeightedPointCloud& w, double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0) {
    throw InvalidSpec("credible_region requires alpha in (0,1)");
  }
  if (w.points.empty()) {
    throw EmptyCloud("credible_region: empty cloud");
  }
  std::vector<std::size_t> order(w.points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return w.log_pi[a] > w.log_pi[b];
  });
  const std::vector<double> wts = w.normalized_weights();

  CredibleRegion region;
  region.level = alpha;
  double cum = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    region.member_indices.push_back(order[k]);
    cum += wts[order[k]];
    // 1e-12 slack: exact-arithmetic boundary cases (e.g. uniform weights)
    // must not spill into an extra member through summation rounding
    if (cum >= 1.0 - alpha - 1e-12) {
      region.cutoff_log_pi = w.log_pi[order[k]];
      return region;
    }
  }
  // Rounding can leave cum a hair below 1-alpha for alpha near 0; the full
  // cloud is then the region.
  region.cutoff_log_pi = w.log_pi[order.back()];
  return region;
}

}  // namespace solve
