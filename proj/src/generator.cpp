#include "solve/generator.hpp"

#include <cmath>

namespace solve {

WeightMatrix::WeightMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
    throw InvalidParameters("weight matrix must be square and nonempty");
  }
  const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12) {
    throw InvalidParameters("weight matrix asymmetry exceeds 1e-12");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(entries_);
  if (es.info() != Eigen::Success) {
    throw EigenFailure("weight matrix eigendecomposition failed");
  }
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw InvalidParameters("weight matrix is not positive definite");
  }
}

WeightMatrix WeightMatrix::identity(int s) {
  return WeightMatrix(Matrix::Identity(s, s));
}

Vector eval_psi(const GeneratorSpec& g, const Vector& x) {
  if (x.size() != g.dim) {
    throw DimensionMismatch("eval_psi: point has length " +
                            std::to_string(x.size()) + ", expected " +
                            std::to_string(g.dim));
  }
  if (!x.allFinite()) {
    throw DomainError("eval_psi: non-finite input point");
  }
  Vector out = g.psi(x);
  if (out.size() != g.codim) {
    throw DimensionMismatch("eval_psi: evaluator returned wrong length");
  }
  if (!out.allFinite()) {
    throw DomainError("eval_psi: constraint map produced non-finite values");
  }
  return out;
}

namespace {

Matrix fd_jacobian(const GeneratorSpec& g, const Vector& x, double step) {
  if (step <= 0.0) {
    throw StepUnderflow("finite-difference step must be positive");
  }
  Matrix jac(g.codim, g.dim);
  Vector xp = x;
  for (int j = 0; j < g.dim; ++j) {
    const double h = step * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    Vector fp = eval_psi(g, xp);
    xp[j] = x[j] - h;
    Vector fm = eval_psi(g, xp);
    xp[j] = x[j];
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

}  // namespace

Matrix eval_jacobian(const GeneratorSpec& g, const Vector& x) {
  if (x.size() != g.dim) {
    throw DimensionMismatch("eval_jacobian: wrong input length");
  }
  if (!x.allFinite()) {
    throw DomainError("eval_jacobian: non-finite input point");
  }
  if (const auto* analytic = std::get_if<AnalyticJacobian>(&g.jacobian_mode)) {
    Matrix jac = analytic->eval(x);
    if (jac.rows() != g.codim || jac.cols() != g.dim) {
      throw DimensionMismatch("eval_jacobian: analytic evaluator returned " +
                              std::to_string(jac.rows()) + "x" +
                              std::to_string(jac.cols()));
    }
    return jac;
  }
  return fd_jacobian(g, x, std::get<FiniteDifferenceJacobian>(g.jacobian_mode).step);
}

double objective(const GeneratorSpec& g, const WeightMatrix& lam, const Vector& x) {
  if (lam.size() != g.codim) {
    throw DimensionMismatch("objective: weight matrix size does not match codim");
  }
  Vector r = eval_psi(g, x);
  return r.dot(lam.mat() * r);
}

Vector grad_objective(const GeneratorSpec& g, const WeightMatrix& lam, const Vector& x) {
  if (lam.size() != g.codim) {
    throw DimensionMismatch("grad_objective: weight matrix size does not match codim");
  }
  Vector r = eval_psi(g, x);
  Matrix jac = eval_jacobian(g, x);
  return 2.0 * jac.transpose() * (lam.mat() * r);
}

double max_abs_residual(const GeneratorSpec& g, const Vector& x) {
  return eval_psi(g, x).cwiseAbs().maxCoeff();
}

}  // namespace solve
