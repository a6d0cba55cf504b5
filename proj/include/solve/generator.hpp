#pragma once

#include <Eigen/Dense>
#include <functional>
#include <variant>

#include "solve/errors.hpp"

namespace solve {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Closed-form Jacobian evaluator: maps a d-vector to the s x d matrix of
/// partial derivatives of the constraint map.
struct AnalyticJacobian {
  std::function<Matrix(const Vector&)> eval;
};

/// Central finite differences with per-coordinate step h_j = step * max(1, |x_j|).
struct FiniteDifferenceJacobian {
  double step = 1e-6;
};

using JacobianMode = std::variant<AnalyticJacobian, FiniteDifferenceJacobian>;

/// A constraint system Psi: R^d -> R^s (s <= d) together with Jacobian access.
/// The zero set {x : Psi(x) = 0} is the solution manifold every solver in this
/// library works on. Evaluators must be pure; instances are immutable after
/// construction and safe to share across threads.
struct GeneratorSpec {
  int dim = 0;    // ambient dimension d
  int codim = 0;  // number of constraints s
  std::function<Vector(const Vector&)> psi;
  JacobianMode jacobian_mode = FiniteDifferenceJacobian{};
};

/// Symmetric positive-definite s x s weight for the scalar criterion.
/// Validated at construction: max asymmetry <= 1e-12 and smallest eigenvalue
/// strictly positive.
class WeightMatrix {
 public:
  explicit WeightMatrix(Matrix entries);
  static WeightMatrix identity(int s);

  const Matrix& mat() const { return entries_; }
  int size() const { return static_cast<int>(entries_.rows()); }

 private:
  Matrix entries_;
};

Vector eval_psi(const GeneratorSpec& g, const Vector& x);
Matrix eval_jacobian(const GeneratorSpec& g, const Vector& x);

/// f(x) = Psi(x)^T Lambda Psi(x); nonnegative, zero exactly on the manifold.
double objective(const GeneratorSpec& g, const WeightMatrix& lam, const Vector& x);

/// grad f(x) = 2 [dPsi(x)]^T Lambda Psi(x).
Vector grad_objective(const GeneratorSpec& g, const WeightMatrix& lam, const Vector& x);

/// max_i |Psi_i(x)|, the residual used by every rejection step.
double max_abs_residual(const GeneratorSpec& g, const Vector& x);

}  // namespace solve
