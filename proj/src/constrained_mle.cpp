#include "solve/constrained_mle.hpp"

#include <cmath>

namespace solve {

double tangential_gradient_norm(const GeneratorSpec& g, const Vector& theta,
                                const Vector& grad) {
  Matrix jac = eval_jacobian(g, theta);
  Eigen::JacobiSVD<Matrix> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().minCoeff() < 1e-10) {
    throw RankDeficient("Jacobian is rank deficient at the query point");
  }
  // Columns of V span the row space of the Jacobian.
  const Matrix& v = svd.matrixV();
  Vector remainder = grad - v * (v.transpose() * grad);
  return remainder.norm();
}

MleResult constrained_mle(const GeneratorSpec& g, const WeightMatrix& lam,
                          const ObjectiveSpec& obj, const Vector& theta0,
                          const MleConfig& cfg) {
  if (cfg.ascent_step <= 0.0 || cfg.tangent_tol <= 0.0 || cfg.max_outer < 1) {
    throw InvalidSpec("MLE config requires positive ascent_step, tangent_tol, max_outer");
  }
  constexpr int kMaxHalvings = 20;

  DescentResult first = descend(g, lam, theta0, cfg.descent);
  if (!first.accepted) {
    throw NotConverged("initial descent from theta0 did not reach the manifold");
  }
  MleResult res;
  res.theta = first.x_final;
  res.value = obj.value(res.theta);
  res.trajectory.emplace_back(res.theta, res.value);
  res.tangential_grad_norm =
      tangential_gradient_norm(g, res.theta, obj.gradient(res.theta));
  if (res.tangential_grad_norm <= cfg.tangent_tol) {
    res.converged = true;
    return res;
  }

  // The fixed point of one ascent step followed by a full descent sits at an
  // O(alpha) offset from the constrained stationary point, so a constant
  // alpha stalls with tangential_grad_norm proportional to alpha. Alpha is
  // therefore halved whenever the iteration reaches its current fixed point
  // (movement much smaller than an ascent step) or the inner descent rejects.
  double alpha = cfg.ascent_step;
  int rejections = 0;
  for (int m = 1; m <= cfg.max_outer; ++m) {
    Vector grad = obj.gradient(res.theta);
    Vector proposal = res.theta + alpha * grad;
    bool stepped = false;
    try {
      DescentResult inner = descend(g, lam, proposal, cfg.descent);
      if (inner.accepted) {
        stepped = true;
        rejections = 0;
        const double moved = (inner.x_final - res.theta).norm();
        res.theta = inner.x_final;
        res.value = obj.value(res.theta);
        res.outer_iters = m;
        res.trajectory.emplace_back(res.theta, res.value);
        res.tangential_grad_norm =
            tangential_gradient_norm(g, res.theta, obj.gradient(res.theta));
        if (res.tangential_grad_norm <= cfg.tangent_tol) {
          res.converged = true;
          return res;
        }
        if (moved < 0.1 * alpha * res.tangential_grad_norm) {
          alpha *= 0.5;  // at the fixed point for this alpha
        }
      }
    } catch (const DomainError&) {
      // proposal outside the model domain: shrink
    } catch (const NonFiniteIterate&) {
    }
    if (!stepped) {
      alpha *= 0.5;
      if (++rejections > kMaxHalvings) {
        throw NotConverged("inner descent kept rejecting after 20 step halvings");
      }
    }
  }
  throw NotConverged("constrained_mle hit max_outer without meeting tangent_tol");
}

MultiStartMleResult multi_start_mle(const GeneratorSpec& g, const WeightMatrix& lam,
                                    const ObjectiveSpec& obj,
                                    const InitDistribution& init, int n_starts,
                                    const MleConfig& cfg, std::uint64_t seed) {
  if (n_starts < 1) {
    throw InvalidSpec("multi_start_mle requires n_starts >= 1");
  }
  MultiStartMleResult out;
  bool have_best = false;
  for (int i = 0; i < n_starts; ++i) {
    try {
      Vector theta0 = draw_init(init, seed, i);
      MleResult r = constrained_mle(g, lam, obj, theta0, cfg);
      if (r.converged && (!have_best || r.value > out.best.value)) {
        out.best = r;
        have_best = true;
      }
      out.all.push_back(std::move(r));
    } catch (const SolveError&) {
      // unconverged or infeasible start: skip
    }
  }
  if (!have_best) {
    throw NoConvergedRuns("no start converged in multi_start_mle");
  }
  return out;
}

}  // namespace solve
