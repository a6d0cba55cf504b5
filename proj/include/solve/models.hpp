#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "solve/constrained_mle.hpp"
#include "solve/generator.hpp"

namespace solve {

double norm_pdf(double z);
double norm_cdf(double z);

/// A named built-in constraint system, plus an optional extra acceptance
/// predicate applied by the sampler (used by the ridge model).
struct ModelInstance {
  std::string name;
  GeneratorSpec generator;
  std::function<bool(const Vector&)> accept_filter;
};

// ---- Gaussian tail constraint ------------------------------------------
// Psi(mu, sigma) = Phi((r1-mu)/sigma) - Phi((r0-mu)/sigma) - s0, with the
// closed-form Jacobian. Domain: sigma > 0.

ModelInstance gaussian_tail(double r0, double r1, double s0);

/// Root of sigma -> Psi(mu, sigma) by bisection. The interval probability is
/// strictly decreasing in sigma for mu strictly inside (r0, r1). Throws
/// InvalidParameters when no root is bracketed.
double gaussian_tail_sigma_star(double r0, double r1, double s0, double mu);

/// Average Gaussian log-likelihood of scalar data in theta = (mu, sigma).
ObjectiveSpec gaussian_loglik(const std::vector<double>& data);

// ---- Missing data -------------------------------------------------------
// theta = (zeta00, zeta01, zeta10, zeta11, mu0, mu1, xi) in the open cube
// (0,1)^7; six polynomial residuals against the observable cell
// probabilities, ordered
//   {P(1,1,1), P(1,0,1), P(0,1,1), P(0,0,1), P(X=0,R=0), P(X=1,R=0)}.

ModelInstance missing_data(const std::array<double, 6>& targets);
ModelInstance missing_data_from_counts(const std::array<std::int64_t, 6>& counts);

/// Forward model: the six observable cell probabilities implied by theta.
std::array<double, 6> missing_data_cell_probs(const Vector& theta);

// ---- Algorithmic fairness -----------------------------------------------

/// Conditional joint table entries p[a][w][y] = P(W=w, Y=y | A=a); each
/// a-slice must sum to 1.
struct FairnessTable {
  double p[2][2][2] = {};
};

/// theta = (q00, q01, q10, q11) with q_{w,a} = theta[2w + a]. The two test
/// fairness ratio equalities are stored in cleared (cross-multiplied)
/// polynomial form, so the map is total.
ModelInstance fairness(const FairnessTable& joint);

/// Raw ratio-form residuals (difference of the two sides of each equality);
/// only meaningful where the denominators are bounded away from zero.
Vector fairness_ratio_residuals(const FairnessTable& joint, const Vector& q);

/// Negated expected squared-error risk of the randomized classifier, suitable
/// for constrained maximization. a1_marginal = P(A=1).
ObjectiveSpec fairness_negative_risk(const FairnessTable& joint,
                                     double a1_marginal = 0.5);

// ---- Moment constraints ---------------------------------------------------

struct MomentFunction {
  std::function<double(const Vector& y, const Vector& theta)> value;
  // optional analytic derivative in theta; when absent for any component the
  // model falls back to finite differences
  std::function<Vector(const Vector& y, const Vector& theta)> grad_theta;
};

/// Psi_l(theta) = (1/n) sum_i g_l(Y_i; theta); requires s < dim.
ModelInstance moment_model(std::vector<MomentFunction> fns,
                           std::vector<Vector> data, int dim);

// ---- Kernel density estimate geometry -------------------------------------

/// Isotropic Gaussian KDE with analytic gradient and Hessian.
class KdeDensity {
 public:
  KdeDensity(std::vector<Vector> data, double h);

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;

  int dim() const { return d_; }
  double bandwidth() const { return h_; }
  const std::vector<Vector>& data() const { return data_; }

 private:
  std::vector<Vector> data_;
  double h_;
  int d_;
  double norm_;  // (2*pi)^(-d/2) / (n h^d)
};

/// Level set {x : p_hat(x) = level}, s = 1, analytic Jacobian.
ModelInstance kde_level_set(const KdeDensity& kde, double level);

/// k-ridge: Psi(x) = V_k(x)^T grad p_hat(x) where V_k collects the d-k
/// eigenvectors of the Hessian with smallest eigenvalues (sign-fixed,
/// eigenvalues sorted descending). FD Jacobian; the acceptance filter
/// additionally requires lambda_{k+1}(x) < 0.
ModelInstance kde_ridge(const KdeDensity& kde, int k);

/// Density level at the q-quantile of {p_hat(X_i)} over the observations.
double level_from_quantile(const KdeDensity& kde, double q);

/// lambda_k - lambda_{k+1} (descending order); FD ridge Jacobians are
/// unreliable where this gap is tiny.
double ridge_eigengap(const KdeDensity& kde, int k, const Vector& x);

/// Exact standard-normal density level set in d=2; companion oracle model
/// for the KDE tests. Level sets are circles of radius
/// sqrt(-2 ln(2 pi level)).
ModelInstance normal2d_level_set(double level);

}  // namespace solve
