#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "solve/generator.hpp"

namespace solve {

struct Backtracking {
  double shrink = 0.5;  // in (0,1)
  int max_halvings = 30;
};

struct DescentConfig {
  double step = 0.1;         // fixed step gamma
  int max_iter = 10000;
  double grad_tol = 1e-10;   // stop when ||grad f||_2 <= grad_tol
  double accept_tol = 1e-8;  // accept iff max|Psi(x_inf)| <= accept_tol
  std::optional<Backtracking> backtracking;
};

/// Outcome of a single gradient-descent chain.
struct DescentResult {
  Vector x_final;
  int iterations = 0;
  std::vector<double> trace;  // f at x_0 .. x_T
  bool accepted = false;
  std::optional<Vector> final_step_dir;  // unit direction of last nonzero step
  double residual = 0.0;                 // max|Psi(x_final)|
};

struct UniformBox {
  Vector lower;
  Vector upper;
};

struct ExplicitPoints {
  std::vector<Vector> points;
};

using InitDistribution = std::variant<UniformBox, ExplicitPoints>;

/// Accepted manifold points collected over many chains.
struct PointCloud {
  std::vector<Vector> points;
  std::vector<double> residuals;
  std::vector<int> iterations;
  std::vector<int> chain_indices;  // originating chain per accepted point
  int attempts = 0;
  std::uint64_t seed = 0;
};

struct RateFit {
  double rate = 0.0;  // in (0,1) for a converging trace
  double r_squared = 0.0;
};

/// Fixed-step gradient descent of f = Psi^T Lambda Psi from x0. A DomainError
/// at a proposed iterate with backtracking disabled marks the chain rejected.
DescentResult descend(const GeneratorSpec& g, const WeightMatrix& lam,
                      const Vector& x0, const DescentConfig& cfg);

/// Runs n_chains independent descents from draws of init; keeps accepted
/// limits. Chain i derives its RNG stream from (seed, i), so results are
/// identical whatever the thread count. An optional extra acceptance
/// predicate (e.g. the ridge eigenvalue condition) filters accepted points.
PointCloud sample_manifold(const GeneratorSpec& g, const WeightMatrix& lam,
                           const InitDistribution& init, int n_chains,
                           const DescentConfig& cfg, std::uint64_t seed,
                           int threads = 1,
                           const std::function<bool(const Vector&)>& extra_accept = {});

/// Least-squares fit of log f(x_t) against t over entries above the 1e-14
/// machine floor; rate = exp(slope).
RateFit fit_convergence_rate(const std::vector<double>& trace);

double acceptance_rate(const PointCloud& cloud);

/// Draws one initial point: chain index i under the given base seed.
Vector draw_init(const InitDistribution& init, std::uint64_t seed, int chain_index);

}  // namespace solve
