#include "solve/models.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace solve {

double norm_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double norm_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

namespace {

// Finite-difference consistency check run when an ObjectiveSpec is built.
void validate_objective(const ObjectiveSpec& obj,
                        const std::vector<Vector>& probes) {
  for (const auto& theta : probes) {
    Vector grad = obj.gradient(theta);
    for (int j = 0; j < theta.size(); ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
      Vector tp = theta, tm = theta;
      tp[j] += h;
      tm[j] -= h;
      const double fd = (obj.value(tp) - obj.value(tm)) / (2.0 * h);
      const double scale = std::max({1.0, std::abs(fd), std::abs(grad[j])});
      if (std::abs(fd - grad[j]) > 1e-4 * scale) {
        throw InvalidSpec("objective gradient disagrees with finite differences");
      }
    }
  }
}

}  // namespace

// ---- Gaussian tail ---------------------------------------------------------

ModelInstance gaussian_tail(double r0, double r1, double s0) {
  if (!(r0 < r1) || !(s0 > 0.0 && s0 < 1.0)) {
    throw InvalidParameters("gaussian_tail requires r0 < r1 and s0 in (0,1)");
  }
  GeneratorSpec g;
  g.dim = 2;
  g.codim = 1;
  g.psi = [r0, r1, s0](const Vector& x) {
    const double mu = x[0], sigma = x[1];
    if (sigma <= 0.0) {
      throw DomainError("gaussian_tail: sigma must be positive");
    }
    Vector out(1);
    out[0] = norm_cdf((r1 - mu) / sigma) - norm_cdf((r0 - mu) / sigma) - s0;
    return out;
  };
  g.jacobian_mode = AnalyticJacobian{[r0, r1](const Vector& x) {
    const double mu = x[0], sigma = x[1];
    if (sigma <= 0.0) {
      throw DomainError("gaussian_tail: sigma must be positive");
    }
    const double z1 = (r1 - mu) / sigma;
    const double z0 = (r0 - mu) / sigma;
    Matrix jac(1, 2);
    jac(0, 0) = (-norm_pdf(z1) + norm_pdf(z0)) / sigma;
    jac(0, 1) = (-z1 * norm_pdf(z1) + z0 * norm_pdf(z0)) / sigma;
    return jac;
  }};
  return ModelInstance{"gaussian_tail", std::move(g), {}};
}

double gaussian_tail_sigma_star(double r0, double r1, double s0, double mu) {
  auto psi = [&](double sigma) {
    return norm_cdf((r1 - mu) / sigma) - norm_cdf((r0 - mu) / sigma) - s0;
  };
  double lo = 1e-12;
  if (psi(lo) <= 0.0) {
    throw InvalidParameters("gaussian_tail_sigma_star: no root at this mu");
  }
  double hi = 1.0;
  while (psi(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e12) {
      throw InvalidParameters("gaussian_tail_sigma_star: root not bracketed");
    }
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (psi(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-15 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

ObjectiveSpec gaussian_loglik(const std::vector<double>& data) {
  if (data.empty()) {
    throw InvalidSpec("gaussian_loglik requires nonempty data");
  }
  const double n = static_cast<double>(data.size());
  double m = 0.0;
  for (double x : data) m += x;
  m /= n;
  double s2 = 0.0;
  for (double x : data) s2 += (x - m) * (x - m);
  s2 /= n;

  ObjectiveSpec obj;
  obj.value = [m, s2](const Vector& theta) {
    const double mu = theta[0], sigma = theta[1];
    if (sigma <= 0.0) {
      throw DomainError("gaussian_loglik: sigma must be positive");
    }
    const double q = s2 + (m - mu) * (m - mu);
    return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sigma) -
           q / (2.0 * sigma * sigma);
  };
  obj.gradient = [m, s2](const Vector& theta) {
    const double mu = theta[0], sigma = theta[1];
    if (sigma <= 0.0) {
      throw DomainError("gaussian_loglik: sigma must be positive");
    }
    const double q = s2 + (m - mu) * (m - mu);
    Vector grad(2);
    grad[0] = (m - mu) / (sigma * sigma);
    grad[1] = -1.0 / sigma + q / (sigma * sigma * sigma);
    return grad;
  };
  validate_objective(obj, {(Vector(2) << 0.5, 1.5).finished(),
                           (Vector(2) << -1.0, 2.7).finished(),
                           (Vector(2) << 2.0, 3.3).finished()});
  return obj;
}

// ---- Missing data ----------------------------------------------------------

namespace {

void check_open_cube(const Vector& theta) {
  for (int j = 0; j < theta.size(); ++j) {
    if (theta[j] <= 0.0 || theta[j] >= 1.0) {
      throw DomainError("probability parameter outside the open unit cube");
    }
  }
}

}  // namespace

std::array<double, 6> missing_data_cell_probs(const Vector& theta) {
  const double z00 = theta[0], z01 = theta[1], z10 = theta[2], z11 = theta[3];
  const double mu0 = theta[4], mu1 = theta[5], xi = theta[6];
  return {
      z11 * mu1 * xi,
      z10 * (1.0 - mu1) * xi,
      z01 * mu0 * (1.0 - xi),
      z00 * (1.0 - mu0) * (1.0 - xi),
      (1.0 - z01) * mu0 * (1.0 - xi) + (1.0 - z00) * (1.0 - mu0) * (1.0 - xi),
      (1.0 - z11) * mu1 * xi + (1.0 - z10) * (1.0 - mu1) * xi,
  };
}

ModelInstance missing_data(const std::array<double, 6>& targets) {
  double sum = 0.0;
  for (double t : targets) {
    if (t < 0.0) throw InvalidTargets("missing_data: negative target probability");
    sum += t;
  }
  if (std::abs(sum - 1.0) > 1e-10) {
    throw InvalidTargets("missing_data: targets must sum to 1");
  }
  GeneratorSpec g;
  g.dim = 7;
  g.codim = 6;
  g.psi = [targets](const Vector& theta) {
    check_open_cube(theta);
    const auto cells = missing_data_cell_probs(theta);
    Vector out(6);
    for (int i = 0; i < 6; ++i) out[i] = cells[static_cast<std::size_t>(i)] - targets[static_cast<std::size_t>(i)];
    return out;
  };
  g.jacobian_mode = AnalyticJacobian{[](const Vector& theta) {
    check_open_cube(theta);
    const double z00 = theta[0], z01 = theta[1], z10 = theta[2], z11 = theta[3];
    const double mu0 = theta[4], mu1 = theta[5], xi = theta[6];
    Matrix jac = Matrix::Zero(6, 7);
    // P(1,1,1) = z11 mu1 xi
    jac(0, 3) = mu1 * xi;
    jac(0, 5) = z11 * xi;
    jac(0, 6) = z11 * mu1;
    // P(1,0,1) = z10 (1-mu1) xi
    jac(1, 2) = (1.0 - mu1) * xi;
    jac(1, 5) = -z10 * xi;
    jac(1, 6) = z10 * (1.0 - mu1);
    // P(0,1,1) = z01 mu0 (1-xi)
    jac(2, 1) = mu0 * (1.0 - xi);
    jac(2, 4) = z01 * (1.0 - xi);
    jac(2, 6) = -z01 * mu0;
    // P(0,0,1) = z00 (1-mu0)(1-xi)
    jac(3, 0) = (1.0 - mu0) * (1.0 - xi);
    jac(3, 4) = -z00 * (1.0 - xi);
    jac(3, 6) = -z00 * (1.0 - mu0);
    // P(X=0,R=0) = (1-z01) mu0 (1-xi) + (1-z00)(1-mu0)(1-xi)
    jac(4, 0) = -(1.0 - mu0) * (1.0 - xi);
    jac(4, 1) = -mu0 * (1.0 - xi);
    jac(4, 4) = ((1.0 - z01) - (1.0 - z00)) * (1.0 - xi);
    jac(4, 6) = -((1.0 - z01) * mu0 + (1.0 - z00) * (1.0 - mu0));
    // P(X=1,R=0) = (1-z11) mu1 xi + (1-z10)(1-mu1) xi
    jac(5, 2) = -(1.0 - mu1) * xi;
    jac(5, 3) = -mu1 * xi;
    jac(5, 5) = ((1.0 - z11) - (1.0 - z10)) * xi;
    jac(5, 6) = (1.0 - z11) * mu1 + (1.0 - z10) * (1.0 - mu1);
    return jac;
  }};
  return ModelInstance{"missing_data", std::move(g), {}};
}

ModelInstance missing_data_from_counts(const std::array<std::int64_t, 6>& counts) {
  std::int64_t total = 0;
  for (std::int64_t c : counts) {
    if (c < 0) throw InvalidTargets("missing_data_from_counts: negative count");
    total += c;
  }
  if (total == 0) {
    throw InvalidTargets("missing_data_from_counts: all counts zero");
  }
  std::array<double, 6> freqs;
  for (std::size_t i = 0; i < 6; ++i) {
    freqs[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  ModelInstance m = missing_data(freqs);
  m.name = "missing_data_counts";
  return m;
}

// ---- Fairness ---------------------------------------------------------------

namespace {

void check_table(const FairnessTable& joint) {
  for (int a = 0; a < 2; ++a) {
    double sum = 0.0;
    for (int w = 0; w < 2; ++w) {
      for (int y = 0; y < 2; ++y) {
        if (joint.p[a][w][y] < 0.0) {
          throw InvalidTable("fairness: negative table entry");
        }
        sum += joint.p[a][w][y];
      }
    }
    if (std::abs(sum - 1.0) > 1e-10) {
      throw InvalidTable("fairness: P(W,Y|A=a) must sum to 1 for each a");
    }
  }
}

struct FairTerms {
  // n_[a] = sum_w q_{w,a} P(W=w,Y=1|A=a); d_[a] = sum_w q_{w,a} P(W=w|A=a)
  double n_[2], d_[2], nc_[2], dc_[2];  // c-suffix: with 1-q
};

FairTerms fair_terms(const FairnessTable& t, const Vector& q) {
  FairTerms f{};
  for (int a = 0; a < 2; ++a) {
    for (int w = 0; w < 2; ++w) {
      const double qwa = q[2 * w + a];
      const double py1 = t.p[a][w][1];
      const double pw = t.p[a][w][0] + t.p[a][w][1];
      f.n_[a] += qwa * py1;
      f.d_[a] += qwa * pw;
      f.nc_[a] += (1.0 - qwa) * py1;
      f.dc_[a] += (1.0 - qwa) * pw;
    }
  }
  return f;
}

}  // namespace

ModelInstance fairness(const FairnessTable& joint) {
  check_table(joint);
  GeneratorSpec g;
  g.dim = 4;
  g.codim = 2;
  g.psi = [joint](const Vector& q) {
    const FairTerms f = fair_terms(joint, q);
    Vector out(2);
    out[0] = f.n_[0] * f.d_[1] - f.n_[1] * f.d_[0];
    out[1] = f.nc_[0] * f.dc_[1] - f.nc_[1] * f.dc_[0];
    return out;
  };
  g.jacobian_mode = AnalyticJacobian{[joint](const Vector& q) {
    const FairTerms f = fair_terms(joint, q);
    Matrix jac(2, 4);
    for (int w = 0; w < 2; ++w) {
      for (int a = 0; a < 2; ++a) {
        const double py1 = joint.p[a][w][1];
        const double pw = joint.p[a][w][0] + joint.p[a][w][1];
        const int col = 2 * w + a;
        if (a == 0) {
          jac(0, col) = py1 * f.d_[1] - f.n_[1] * pw;
          jac(1, col) = -py1 * f.dc_[1] + f.nc_[1] * pw;
        } else {
          jac(0, col) = f.n_[0] * pw - py1 * f.d_[0];
          jac(1, col) = -f.nc_[0] * pw + py1 * f.dc_[0];
        }
      }
    }
    return jac;
  }};
  return ModelInstance{"fairness", std::move(g), {}};
}

Vector fairness_ratio_residuals(const FairnessTable& joint, const Vector& q) {
  const FairTerms f = fair_terms(joint, q);
  Vector out(2);
  out[0] = f.n_[0] / f.d_[0] - f.n_[1] / f.d_[1];
  out[1] = f.nc_[0] / f.dc_[0] - f.nc_[1] / f.dc_[1];
  return out;
}

ObjectiveSpec fairness_negative_risk(const FairnessTable& joint, double a1_marginal) {
  check_table(joint);
  if (a1_marginal < 0.0 || a1_marginal > 1.0) {
    throw InvalidTable("fairness_negative_risk: P(A=1) must be in [0,1]");
  }
  const double pa[2] = {1.0 - a1_marginal, a1_marginal};
  // Squared error of the classifier's probability q_{W,A} against Y:
  // R(q) = sum_{a,w,y} P(a) P(w,y|a) (q_{w,a} - y)^2, a strictly convex
  // quadratic with the Bayes regressor P(Y=1|w,a) as unconstrained minimum.
  // (The 0-1 sampled-label loss would be linear in q and push the optimum to
  // the cube boundary, where the tangential stopping rule cannot trigger.)
  Vector cell_mass(4), cell_y1(4);
  for (int w = 0; w < 2; ++w) {
    for (int a = 0; a < 2; ++a) {
      cell_mass[2 * w + a] = pa[a] * (joint.p[a][w][0] + joint.p[a][w][1]);
      cell_y1[2 * w + a] = pa[a] * joint.p[a][w][1];
    }
  }
  ObjectiveSpec obj;
  obj.value = [cell_mass, cell_y1](const Vector& q) {
    double r = 0.0;
    for (int i = 0; i < 4; ++i) {
      r += cell_mass[i] * q[i] * q[i] - 2.0 * cell_y1[i] * q[i] + cell_y1[i];
    }
    return -r;
  };
  obj.gradient = [cell_mass, cell_y1](const Vector& q) {
    Vector g(4);
    for (int i = 0; i < 4; ++i) {
      g[i] = -(2.0 * cell_mass[i] * q[i] - 2.0 * cell_y1[i]);
    }
    return g;
  };
  validate_objective(obj, {Vector::Constant(4, 0.3), Vector::Constant(4, 0.7)});
  return obj;
}

// ---- Moment constraints ------------------------------------------------------

ModelInstance moment_model(std::vector<MomentFunction> fns,
                           std::vector<Vector> data, int dim) {
  const int s = static_cast<int>(fns.size());
  if (s < 1 || s >= dim) {
    throw InvalidSpec("moment_model requires 1 <= s < dim");
  }
  if (data.empty()) {
    throw InvalidSpec("moment_model requires nonempty data");
  }
  bool analytic = true;
  for (const auto& f : fns) {
    if (!f.value) throw InvalidSpec("moment_model: missing moment function");
    if (!f.grad_theta) analytic = false;
  }
  auto fns_ptr = std::make_shared<std::vector<MomentFunction>>(std::move(fns));
  auto data_ptr = std::make_shared<std::vector<Vector>>(std::move(data));

  GeneratorSpec g;
  g.dim = dim;
  g.codim = s;
  g.psi = [fns_ptr, data_ptr, s](const Vector& theta) {
    Vector out = Vector::Zero(s);
    for (const auto& y : *data_ptr) {
      for (int l = 0; l < s; ++l) {
        out[l] += (*fns_ptr)[static_cast<std::size_t>(l)].value(y, theta);
      }
    }
    out /= static_cast<double>(data_ptr->size());
    return out;
  };
  if (analytic) {
    g.jacobian_mode = AnalyticJacobian{[fns_ptr, data_ptr, s, dim](const Vector& theta) {
      Matrix jac = Matrix::Zero(s, dim);
      for (const auto& y : *data_ptr) {
        for (int l = 0; l < s; ++l) {
          jac.row(l) += (*fns_ptr)[static_cast<std::size_t>(l)].grad_theta(y, theta).transpose();
        }
      }
      jac /= static_cast<double>(data_ptr->size());
      return jac;
    }};
  }
  return ModelInstance{"moment", std::move(g), {}};
}

// ---- KDE geometry -------------------------------------------------------------

KdeDensity::KdeDensity(std::vector<Vector> data, double h)
    : data_(std::move(data)), h_(h) {
  if (h_ <= 0.0) {
    throw InvalidBandwidth("KdeDensity requires h > 0");
  }
  if (data_.empty()) {
    throw InvalidSpec("KdeDensity requires nonempty data");
  }
  d_ = static_cast<int>(data_[0].size());
  norm_ = std::pow(2.0 * std::numbers::pi, -0.5 * d_) /
          (static_cast<double>(data_.size()) * std::pow(h_, d_));
}

double KdeDensity::value(const Vector& x) const {
  double acc = 0.0;
  const double inv2h2 = 1.0 / (2.0 * h_ * h_);
  for (const auto& xi : data_) {
    acc += std::exp(-(x - xi).squaredNorm() * inv2h2);
  }
  return norm_ * acc;
}

Vector KdeDensity::gradient(const Vector& x) const {
  Vector grad = Vector::Zero(d_);
  const double inv2h2 = 1.0 / (2.0 * h_ * h_);
  for (const auto& xi : data_) {
    const double e = std::exp(-(x - xi).squaredNorm() * inv2h2);
    grad -= e * (x - xi);
  }
  return norm_ / (h_ * h_) * grad;
}

Matrix KdeDensity::hessian(const Vector& x) const {
  Matrix hess = Matrix::Zero(d_, d_);
  const double h2 = h_ * h_;
  const double inv2h2 = 1.0 / (2.0 * h2);
  for (const auto& xi : data_) {
    const Vector u = x - xi;
    const double e = std::exp(-u.squaredNorm() * inv2h2);
    hess += e * (u * u.transpose() / (h2 * h2) -
                 Matrix::Identity(d_, d_) / h2);
  }
  return norm_ * hess;
}

ModelInstance kde_level_set(const KdeDensity& kde, double level) {
  if (level <= 0.0) {
    throw InvalidSpec("kde_level_set requires a positive level");
  }
  GeneratorSpec g;
  g.dim = kde.dim();
  g.codim = 1;
  g.psi = [kde, level](const Vector& x) {
    Vector out(1);
    out[0] = kde.value(x) - level;
    return out;
  };
  g.jacobian_mode = AnalyticJacobian{[kde](const Vector& x) {
    Matrix jac(1, kde.dim());
    jac.row(0) = kde.gradient(x).transpose();
    return jac;
  }};
  return ModelInstance{"kde_level_set", std::move(g), {}};
}

namespace {

// Eigenvectors of the d-k smallest eigenvalues, each sign-fixed so its
// largest-magnitude component is positive, as columns in ascending
// eigenvalue order.
Matrix trailing_eigenvectors(const Matrix& hess, int k) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hess);
  if (es.info() != Eigen::Success) {
    throw EigenFailure("Hessian eigendecomposition failed");
  }
  const int d = static_cast<int>(hess.rows());
  Matrix v = es.eigenvectors().leftCols(d - k);
  for (int c = 0; c < v.cols(); ++c) {
    int imax = 0;
    v.col(c).cwiseAbs().maxCoeff(&imax);
    if (v(imax, c) < 0.0) v.col(c) = -v.col(c);
  }
  return v;
}

}  // namespace

ModelInstance kde_ridge(const KdeDensity& kde, int k) {
  const int d = kde.dim();
  if (k < 0 || k >= d) {
    throw InvalidSpec("kde_ridge requires k in {0..d-1}");
  }
  GeneratorSpec g;
  g.dim = d;
  g.codim = d - k;
  g.psi = [kde, k](const Vector& x) {
    const Matrix v = trailing_eigenvectors(kde.hessian(x), k);
    return Vector(v.transpose() * kde.gradient(x));
  };
  g.jacobian_mode = FiniteDifferenceJacobian{1e-6};
  auto filter = [kde, k, d](const Vector& x) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(kde.hessian(x));
    if (es.info() != Eigen::Success) return false;
    // lambda_{k+1} in descending order is the (d-k-1)-th ascending eigenvalue
    return es.eigenvalues()[d - k - 1] < 0.0;
  };
  return ModelInstance{"kde_ridge", std::move(g), filter};
}

double level_from_quantile(const KdeDensity& kde, double q) {
  if (q <= 0.0 || q >= 1.0) {
    throw InvalidSpec("level_from_quantile requires q in (0,1)");
  }
  std::vector<double> dens;
  dens.reserve(kde.data().size());
  for (const auto& xi : kde.data()) dens.push_back(kde.value(xi));
  std::sort(dens.begin(), dens.end());
  const auto n = dens.size();
  const std::size_t idx = std::min(
      n - 1, static_cast<std::size_t>(std::ceil(q * static_cast<double>(n))) - 1);
  return dens[idx];
}

double ridge_eigengap(const KdeDensity& kde, int k, const Vector& x) {
  const int d = kde.dim();
  if (k < 1 || k >= d) {
    throw InvalidSpec("ridge_eigengap requires k in {1..d-1}");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(kde.hessian(x));
  if (es.info() != Eigen::Success) {
    throw EigenFailure("Hessian eigendecomposition failed");
  }
  return es.eigenvalues()[d - k] - es.eigenvalues()[d - k - 1];
}

ModelInstance normal2d_level_set(double level) {
  const double peak = 1.0 / (2.0 * std::numbers::pi);
  if (level <= 0.0 || level >= peak) {
    throw InvalidSpec("normal2d_level_set level must be in (0, 1/(2 pi))");
  }
  GeneratorSpec g;
  g.dim = 2;
  g.codim = 1;
  g.psi = [level, peak](const Vector& x) {
    Vector out(1);
    out[0] = peak * std::exp(-0.5 * x.squaredNorm()) - level;
    return out;
  };
  g.jacobian_mode = AnalyticJacobian{[peak](const Vector& x) {
    const double p = peak * std::exp(-0.5 * x.squaredNorm());
    Matrix jac(1, 2);
    jac.row(0) = -p * x.transpose();
    return jac;
  }};
  return ModelInstance{"normal2d_level_set", std::move(g), {}};
}

}  // namespace solve
