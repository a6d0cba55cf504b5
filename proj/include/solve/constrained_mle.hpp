#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "solve/descent.hpp"
#include "solve/generator.hpp"

namespace solve {

/// Objective to maximize over the manifold: a log-likelihood, or a negated
/// risk. The gradient must be consistent with the value (validated against
/// finite differences at registration for the built-in models).
struct ObjectiveSpec {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

struct MleConfig {
  double ascent_step = 0.1;  // alpha
  DescentConfig descent;     // inner loop back to the manifold
  double tangent_tol = 1e-6;
  int max_outer = 500;
};

struct MleResult {
  Vector theta;
  double value = 0.0;
  int outer_iters = 0;
  double tangential_grad_norm = 0.0;
  bool converged = false;
  std::vector<std::pair<Vector, double>> trajectory;  // per outer iteration
};

struct MultiStartMleResult {
  MleResult best;
  std::vector<MleResult> all;
};

/// Norm of the component of grad orthogonal to the Jacobian row space at
/// theta. Zero exactly when grad is normal to the manifold, i.e. at a
/// constrained stationary point.
double tangential_gradient_norm(const GeneratorSpec& g, const Vector& theta,
                                const Vector& grad);

/// Alternates one objective gradient-ascent step with a full descent back to
/// the manifold; stops when the objective gradient lies in the Jacobian row
/// space to tangent_tol. A rejected inner descent halves the ascent step and
/// retries, up to 20 halvings.
MleResult constrained_mle(const GeneratorSpec& g, const WeightMatrix& lam,
                          const ObjectiveSpec& obj, const Vector& theta0,
                          const MleConfig& cfg);

MultiStartMleResult multi_start_mle(const GeneratorSpec& g, const WeightMatrix& lam,
                                    const ObjectiveSpec& obj,
                                    const InitDistribution& init, int n_starts,
                                    const MleConfig& cfg, std::uint64_t seed);

}  // namespace solve
