#pragma once

#include <cstddef>
#include <vector>

#include "solve/generator.hpp"

namespace solve {

/// Unnormalized log prior: any function with log_score = log rho where
/// rho is proportional to the prior density on the manifold.
struct PriorSpec {
  std::function<double(const Vector&)> log_score;
};

/// Manifold points with kernel density scores, unnormalized log posterior
/// scores, and log importance weights log_omega = log_pi - log(rho).
struct WeightedPointCloud {
  std::vector<Vector> points;
  std::vector<double> rho;
  std::vector<double> log_pi;
  std::vector<double> log_omega;
  double bandwidth = 0.0;

  /// exp-normalized weights (max-subtracted), summing to 1.
  std::vector<double> normalized_weights() const;
};

struct CredibleRegion {
  double level = 0.0;                        // alpha
  std::vector<std::size_t> member_indices;   // highest-log_pi prefix
  double cutoff_log_pi = 0.0;
};

struct IndexedPoint {
  Vector point;
  std::size_t index = 0;
};

/// Gaussian-kernel density scores rho_i = (1/N) sum_j exp(-||Z_i-Z_j||^2/(2h^2)),
/// self-term included.
std::vector<double> density_scores(const std::vector<Vector>& points, double h);

/// h = sigma_bar * (4 / ((d+2) N))^(1/(d+4)) with sigma_bar the average
/// per-coordinate sample standard deviation.
double silverman_bandwidth(const std::vector<Vector>& points);

WeightedPointCloud posterior_weights(const std::vector<Vector>& points,
                                     const PriorSpec& prior,
                                     const std::function<double(const Vector&)>& loglik,
                                     double h);

/// Importance-sampling posterior mean; may lie off the manifold.
Vector posterior_mean(const WeightedPointCloud& w);

IndexedPoint map_estimate(const WeightedPointCloud& w);

/// Cloud point minimizing the weighted sum of squared distances to the cloud.
IndexedPoint frechet_mean(const WeightedPointCloud& w);

/// Minimal prefix of points, ordered by descending log_pi, whose cumulative
/// normalized weight reaches 1 - alpha.
CredibleRegion credible_region(const WeightedPointCloud& w, double alpha);

}  // namespace solve
