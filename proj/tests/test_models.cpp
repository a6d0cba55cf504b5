#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "solve/descent.hpp"
#include "solve/models.hpp"

using namespace solve;

namespace {

UniformBox make_box(std::initializer_list<double> lo,
                    std::initializer_list<double> hi) {
  UniformBox box;
  box.lower = Vector(static_cast<Eigen::Index>(lo.size()));
  box.upper = Vector(static_cast<Eigen::Index>(hi.size()));
  Eigen::Index i = 0;
  for (double v : lo) box.lower[i++] = v;
  i = 0;
  for (double v : hi) box.upper[i++] = v;
  return box;
}

// Central finite differences of psi, independent of eval_jacobian.
Matrix fd_jacobian(const GeneratorSpec& g, const Vector& x, double h = 1e-6) {
  Matrix jac(g.codim, g.dim);
  for (int j = 0; j < g.dim; ++j) {
    const double hj = h * std::max(1.0, std::abs(x[j]));
    Vector xp = x, xm = x;
    xp[j] += hj;
    xm[j] -= hj;
    jac.col(j) = (g.psi(xp) - g.psi(xm)) / (2.0 * hj);
  }
  return jac;
}

void check_jacobian_fd(const GeneratorSpec& g,
                       const std::function<Vector(std::mt19937_64&)>& draw,
                       double tol = 1e-5) {
  std::mt19937_64 rng(2024);
  const auto& analytic = std::get<AnalyticJacobian>(g.jacobian_mode);
  for (int rep = 0; rep < 100; ++rep) {
    const Vector x = draw(rng);
    const Matrix ja = analytic.eval(x);
    const Matrix jf = fd_jacobian(g, x);
    const double scale = std::max(1.0, jf.cwiseAbs().maxCoeff());
    CHECK((ja - jf).cwiseAbs().maxCoeff() <= tol * scale);
  }
}

FairnessTable random_table(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  FairnessTable t;
  for (int a = 0; a < 2; ++a) {
    double sum = 0.0;
    for (int w = 0; w < 2; ++w)
      for (int y = 0; y < 2; ++y) sum += (t.p[a][w][y] = u(rng));
    for (int w = 0; w < 2; ++w)
      for (int y = 0; y < 2; ++y) t.p[a][w][y] /= sum;
  }
  return t;
}

std::vector<Vector> mixture_data(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dn(0.0, 1.0);
  std::vector<Vector> data;
  data.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vector p(2);
    p << ((i % 2 == 0) ? -2.0 : 2.0) + dn(rng), dn(rng);
    data.push_back(p);
  }
  return data;
}

}  // namespace

TEST_CASE("gaussian tail: reference configuration and bisection oracle") {
  ModelInstance m = gaussian_tail(-5.0, 2.0, 0.5);
  CHECK(m.generator.dim == 2);
  CHECK(m.generator.codim == 1);

  // symmetric mu = -1.5 reduces the root equation to Phi(3.5/sigma) = 0.75
  const double sstar = gaussian_tail_sigma_star(-5.0, 2.0, 0.5, -1.5);
  CHECK(norm_cdf(3.5 / sstar) == doctest::Approx(0.75).epsilon(1e-12));
  Vector th(2);
  th << -1.5, sstar;
  CHECK(std::abs(eval_psi(m.generator, th)[0]) <= 1e-12);

  // independent quadrature-based bisection agrees
  CHECK(sstar == doctest::Approx(oracle::tail_sigma_star(-5.0, 2.0, 0.5, -1.5))
                     .epsilon(1e-10));
  for (double mu : {-4.0, -2.0, 0.0, 1.0}) {
    CHECK(gaussian_tail_sigma_star(-5.0, 2.0, 0.5, mu) ==
          doctest::Approx(oracle::tail_sigma_star(-5.0, 2.0, 0.5, mu))
              .epsilon(1e-10));
  }
}

TEST_CASE("gaussian tail: validation and domain errors") {
  CHECK_THROWS_AS(gaussian_tail(2.0, -5.0, 0.5), InvalidParameters);
  CHECK_THROWS_AS(gaussian_tail(1.0, 1.0, 0.5), InvalidParameters);
  CHECK_THROWS_AS(gaussian_tail(-5.0, 2.0, 0.0), InvalidParameters);
  CHECK_THROWS_AS(gaussian_tail(-5.0, 2.0, 1.0), InvalidParameters);

  ModelInstance m = gaussian_tail(-5.0, 2.0, 0.5);
  Vector bad(2);
  bad << 0.0, -1.0;
  CHECK_THROWS_AS(eval_psi(m.generator, bad), DomainError);
  CHECK_THROWS_AS(eval_jacobian(m.generator, bad), DomainError);
  // sigma* undefined when mu is outside (r0, r1)
  CHECK_THROWS_AS(gaussian_tail_sigma_star(-5.0, 2.0, 0.5, 3.0),
                  InvalidParameters);
}

TEST_CASE("gaussian tail: s0 near 1 is unreachable from the box") {
  // interval probability is strictly below 1 for finite sigma; with s0 this
  // extreme no chain started in [1,3]x[2,4] reaches the manifold
  ModelInstance m = gaussian_tail(-5.0, 2.0, 1.0 - 1e-9);
  DescentConfig cfg;
  cfg.step = 0.5;
  CHECK_THROWS_AS(sample_manifold(m.generator, WeightMatrix::identity(1),
                                  make_box({1.0, 2.0}, {3.0, 4.0}), 40, cfg, 3),
                  NoAcceptedPoints);
}

TEST_CASE("gaussian tail: psi strictly decreasing in sigma at symmetric mu") {
  ModelInstance m = gaussian_tail(-5.0, 2.0, 0.5);
  double prev = std::numeric_limits<double>::infinity();
  for (double sigma = 0.5; sigma <= 20.0; sigma += 0.25) {
    Vector th(2);
    th << -1.5, sigma;
    const double v = eval_psi(m.generator, th)[0];
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("norm_cdf matches the quadrature oracle") {
  for (double z = -6.0; z <= 6.0; z += 0.37) {
    CHECK(norm_cdf(z) == doctest::Approx(oracle::norm_cdf(z)).epsilon(1e-13));
  }
}

TEST_CASE("missing data: forward-constructed targets are consistent") {
  Vector theta0 = Vector::Constant(7, 0.5);
  const auto cells = missing_data_cell_probs(theta0);
  CHECK(cells[0] == doctest::Approx(0.125).epsilon(1e-15));  // P(1,1,1)
  CHECK(cells[1] == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(cells[2] == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(cells[3] == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(cells[4] == doctest::Approx(0.25).epsilon(1e-15));  // P(X=0,R=0)
  CHECK(cells[5] == doctest::Approx(0.25).epsilon(1e-15));  // P(X=1,R=0)

  ModelInstance m = missing_data(cells);
  CHECK(eval_psi(m.generator, theta0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("missing data: perturbing xi breaks every xi-bearing residual") {
  const std::array<double, 6> targets{0.125, 0.125, 0.125, 0.125, 0.25, 0.25};
  ModelInstance m = missing_data(targets);
  Vector theta = Vector::Constant(7, 0.5);
  theta[6] = 0.6;
  const Vector psi = eval_psi(m.generator, theta);
  // direct polynomial arithmetic: each R=1 cell with X=1 gains the factor
  // 0.6/0.5, the X=0 cells lose it, and the R=0 cells shift by 0.05
  CHECK(psi[0] == doctest::Approx(0.25 * 0.6 - 0.125).epsilon(1e-14));
  CHECK(psi[1] == doctest::Approx(0.25 * 0.6 - 0.125).epsilon(1e-14));
  CHECK(psi[2] == doctest::Approx(0.25 * 0.4 - 0.125).epsilon(1e-14));
  CHECK(psi[3] == doctest::Approx(0.25 * 0.4 - 0.125).epsilon(1e-14));
  CHECK(psi[4] == doctest::Approx(0.5 * 0.4 - 0.25).epsilon(1e-14));
  CHECK(psi[5] == doctest::Approx(0.5 * 0.6 - 0.25).epsilon(1e-14));
  CHECK(psi.cwiseAbs().maxCoeff() == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("missing data: cell probabilities sum to 1 identically") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(1e-3, 1.0 - 1e-3);
  for (int rep = 0; rep < 200; ++rep) {
    Vector theta(7);
    for (int j = 0; j < 7; ++j) theta[j] = u(rng);
    const auto cells = missing_data_cell_probs(theta);
    double sum = 0.0;
    for (double c : cells) {
      CHECK(c >= 0.0);
      sum += c;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("missing data: target validation and counts ingestion") {
  CHECK_THROWS_AS(missing_data({-0.1, 0.3, 0.3, 0.3, 0.1, 0.1}), InvalidTargets);
  CHECK_THROWS_AS(missing_data({0.2, 0.2, 0.2, 0.2, 0.2, 0.2}), InvalidTargets);
  CHECK_THROWS_AS(missing_data_from_counts({-1, 1, 1, 1, 1, 1}), InvalidTargets);
  CHECK_THROWS_AS(missing_data_from_counts({0, 0, 0, 0, 0, 0}), InvalidTargets);

  // counts plug in empirical frequencies: residual at theta0 shifts by
  // target difference exactly
  ModelInstance m = missing_data_from_counts({2, 3, 2, 3, 5, 5});
  Vector theta0 = Vector::Constant(7, 0.5);
  const Vector psi = eval_psi(m.generator, theta0);
  CHECK(psi[0] == doctest::Approx(0.125 - 0.10).epsilon(1e-14));
  CHECK(psi[1] == doctest::Approx(0.125 - 0.15).epsilon(1e-14));
  CHECK(psi[4] == doctest::Approx(0.25 - 0.25).epsilon(1e-14));

  Vector edge = Vector::Constant(7, 0.5);
  edge[2] = 1.0;
  CHECK_THROWS_AS(eval_psi(m.generator, edge), DomainError);
}

TEST_CASE("fairness: identical a-slices accept group-blind classifiers") {
  FairnessTable t;
  const double slice[2][2] = {{0.3, 0.25}, {0.2, 0.25}};  // [w][y]
  for (int a = 0; a < 2; ++a)
    for (int w = 0; w < 2; ++w)
      for (int y = 0; y < 2; ++y) t.p[a][w][y] = slice[w][y];

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int rep = 0; rep < 50; ++rep) {
    Vector q(4);
    const double q0 = u(rng), q1 = u(rng);
    q << q0, q0, q1, q1;  // q_{w,0} = q_{w,1}
    ModelInstance m = fairness(t);
    CHECK(eval_psi(m.generator, q).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("fairness: cleared form is the ratio form times denominators") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int rep = 0; rep < 1000; ++rep) {
    const FairnessTable t = random_table(rng);
    Vector q(4);
    for (int j = 0; j < 4; ++j) q[j] = u(rng);

    double d[2] = {0.0, 0.0}, dc[2] = {0.0, 0.0};
    for (int a = 0; a < 2; ++a) {
      for (int w = 0; w < 2; ++w) {
        const double pw = t.p[a][w][0] + t.p[a][w][1];
        d[a] += q[2 * w + a] * pw;
        dc[a] += (1.0 - q[2 * w + a]) * pw;
      }
    }
    REQUIRE(std::min({d[0], d[1], dc[0], dc[1]}) > 1e-6);

    ModelInstance m = fairness(t);
    const Vector cleared = eval_psi(m.generator, q);
    const Vector ratio = fairness_ratio_residuals(t, q);
    CHECK(cleared[0] ==
          doctest::Approx(ratio[0] * d[0] * d[1]).epsilon(1e-12));
    CHECK(cleared[1] ==
          doctest::Approx(ratio[1] * dc[0] * dc[1]).epsilon(1e-12));
  }
}

TEST_CASE("fairness: cleared form is total at q = 0 where the ratio is 0/0") {
  std::mt19937_64 rng(31);
  const FairnessTable t = random_table(rng);
  const Vector q = Vector::Zero(4);
  ModelInstance m = fairness(t);
  const Vector cleared = eval_psi(m.generator, q);
  CHECK(std::isfinite(cleared[0]));
  CHECK(std::isfinite(cleared[1]));
  CHECK(cleared[0] == 0.0);  // numerators and denominators all vanish
  const Vector ratio = fairness_ratio_residuals(t, q);
  CHECK(!std::isfinite(ratio[0]));
}

TEST_CASE("fairness: sampled points satisfy the original ratio equalities") {
  FairnessTable t;
  t.p[0][0][0] = 0.34; t.p[0][0][1] = 0.31;
  t.p[0][1][0] = 0.13; t.p[0][1][1] = 0.22;
  t.p[1][0][0] = 0.34; t.p[1][0][1] = 0.22;
  t.p[1][1][0] = 0.105; t.p[1][1][1] = 0.335;

  ModelInstance m = fairness(t);
  DescentConfig cfg;
  cfg.step = 5.0;
  cfg.max_iter = 50000;
  PointCloud cloud =
      sample_manifold(m.generator, WeightMatrix::identity(2),
                      make_box({0.15, 0.15, 0.15, 0.15},
                               {0.85, 0.85, 0.85, 0.85}),
                      30, cfg, 11);
  REQUIRE(cloud.points.size() >= 10);
  for (const auto& q : cloud.points) {
    double d[2] = {0.0, 0.0}, dc[2] = {0.0, 0.0};
    for (int a = 0; a < 2; ++a) {
      for (int w = 0; w < 2; ++w) {
        const double pw = t.p[a][w][0] + t.p[a][w][1];
        d[a] += q[2 * w + a] * pw;
        dc[a] += (1.0 - q[2 * w + a]) * pw;
      }
    }
    if (std::min({d[0], d[1], dc[0], dc[1]}) > 1e-4) {
      const Vector ratio = fairness_ratio_residuals(t, q);
      CHECK(ratio.cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("fairness: table validation") {
  FairnessTable bad;
  bad.p[0][0][0] = -0.1; bad.p[0][0][1] = 0.5;
  bad.p[0][1][0] = 0.3; bad.p[0][1][1] = 0.3;
  bad.p[1][0][0] = 0.25; bad.p[1][0][1] = 0.25;
  bad.p[1][1][0] = 0.25; bad.p[1][1][1] = 0.25;
  CHECK_THROWS_AS(fairness(bad), InvalidTable);

  FairnessTable off;
  for (int w = 0; w < 2; ++w)
    for (int y = 0; y < 2; ++y) {
      off.p[0][w][y] = 0.25;
      off.p[1][w][y] = 0.3;  // a=1 slice sums to 1.2
    }
  CHECK_THROWS_AS(fairness(off), InvalidTable);
  CHECK_THROWS_AS(fairness_negative_risk(off), InvalidTable);
}

TEST_CASE("moment model: second-moment constraint carves out the circle") {
  const double s0 = 2.0;
  // two-point data with mean square exactly s0^2: the population constraint
  std::vector<Vector> data{(Vector(1) << s0).finished(),
                           (Vector(1) << -s0).finished()};
  MomentFunction g;
  g.value = [](const Vector& y, const Vector& th) {
    return y[0] * y[0] - th[0] * th[0] - th[1] * th[1];
  };
  g.grad_theta = [](const Vector&, const Vector& th) {
    return Vector((Vector(2) << -2.0 * th[0], -2.0 * th[1]).finished());
  };
  ModelInstance m = moment_model({g}, data, 2);

  DescentConfig cfg;
  cfg.step = 0.05;
  PointCloud cloud = sample_manifold(m.generator, WeightMatrix::identity(1),
                                     make_box({-3.0, 0.1}, {3.0, 3.0}), 100,
                                     cfg, 21);
  REQUIRE(cloud.points.size() >= 95);
  for (const auto& th : cloud.points) {
    CHECK(std::abs(th[0] * th[0] + th[1] * th[1] - s0 * s0) <= 1e-8);
  }
}

TEST_CASE("moment model: linear moment gives the hyperplane theta_1 = m") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Vector> data;
  double m = 0.0;
  for (int i = 0; i < 57; ++i) {
    data.push_back((Vector(1) << u(rng)).finished());
    m += data.back()[0];
  }
  m /= 57.0;

  MomentFunction g;
  g.value = [](const Vector& y, const Vector& th) { return y[0] - th[0]; };
  ModelInstance inst = moment_model({g}, data, 2);
  // no analytic grad supplied -> FD mode
  CHECK(std::holds_alternative<FiniteDifferenceJacobian>(
      inst.generator.jacobian_mode));

  for (double free : {-5.0, 0.0, 7.3}) {
    Vector th(2);
    th << m, free;
    CHECK(std::abs(eval_psi(inst.generator, th)[0]) <= 1e-14);
  }
  DescentConfig cfg;
  cfg.step = 0.4;
  DescentResult res = descend(inst.generator, WeightMatrix::identity(1),
                              (Vector(2) << m + 3.0, 1.0).finished(), cfg);
  CHECK(res.accepted);
  CHECK(res.x_final[0] == doctest::Approx(m).epsilon(1e-7));
  CHECK(res.x_final[1] == doctest::Approx(1.0).epsilon(1e-12));  // untouched
}

TEST_CASE("moment model: spec validation") {
  std::vector<Vector> data{(Vector(1) << 1.0).finished()};
  MomentFunction g;
  g.value = [](const Vector& y, const Vector& th) { return y[0] - th[0]; };
  CHECK_THROWS_AS(moment_model({g, g}, data, 2), InvalidSpec);  // s >= d
  CHECK_THROWS_AS(moment_model({g}, {}, 2), InvalidSpec);       // empty data
  CHECK_THROWS_AS(moment_model({}, data, 2), InvalidSpec);      // s < 1
  MomentFunction empty;
  CHECK_THROWS_AS(moment_model({empty}, data, 2), InvalidSpec);
}

TEST_CASE("kde: density, gradient and Hessian agree with finite differences") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> dn(0.0, 1.5);
  std::vector<Vector> data;
  for (int i = 0; i < 20; ++i) {
    Vector p(3);
    p << dn(rng), dn(rng), dn(rng);
    data.push_back(p);
  }
  CHECK_THROWS_AS(KdeDensity(data, 0.0), InvalidBandwidth);
  CHECK_THROWS_AS(KdeDensity(data, -0.5), InvalidBandwidth);

  KdeDensity kde(data, 0.7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    Vector x(3);
    x << u(rng), u(rng), u(rng);
    CHECK(kde.value(x) >= 0.0);

    const Vector grad = kde.gradient(x);
    const Matrix hess = kde.hessian(x);
    CHECK((hess - hess.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    const double h = 1e-5;
    for (int j = 0; j < 3; ++j) {
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const double fd_g = (kde.value(xp) - kde.value(xm)) / (2.0 * h);
      CHECK(grad[j] == doctest::Approx(fd_g).epsilon(1e-5));
      const Vector fd_h = (kde.gradient(xp) - kde.gradient(xm)) / (2.0 * h);
      for (int i2 = 0; i2 < 3; ++i2) {
        CHECK(hess(i2, j) ==
              doctest::Approx(fd_h[i2]).epsilon(1e-5).scale(1e-3));
      }
    }
  }
}

TEST_CASE("analytic normal level set matches the radial root-find oracle") {
  for (double level : {0.02, 0.05, 0.1}) {
    ModelInstance m = normal2d_level_set(level);
    DescentConfig cfg;
    cfg.step = 20.0;
    PointCloud cloud =
        sample_manifold(m.generator, WeightMatrix::identity(1),
                        make_box({-4.0, -3.0}, {4.0, 3.0}), 50, cfg, 5);
    REQUIRE(cloud.points.size() >= 45);
    const double r = oracle::normal2d_level_radius(level);
    for (const auto& x : cloud.points) {
      CHECK(x.norm() == doctest::Approx(r).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(normal2d_level_set(0.0), InvalidSpec);
  CHECK_THROWS_AS(normal2d_level_set(0.2), InvalidSpec);  // above the mode
}

TEST_CASE("kde level set: sampled points sit on the level to accept_tol") {
  KdeDensity kde(mixture_data(200, 42), 0.8);
  const double lam = level_from_quantile(kde, 0.25);
  ModelInstance m = kde_level_set(kde, lam);
  DescentConfig cfg;
  cfg.step = 10.0;
  cfg.max_iter = 20000;
  PointCloud cloud =
      sample_manifold(m.generator, WeightMatrix::identity(1),
                      make_box({-4.0, -3.0}, {4.0, 3.0}), 50, cfg, 5);
  REQUIRE(cloud.points.size() >= 40);
  for (const auto& x : cloud.points) {
    CHECK(std::abs(kde.value(x) - lam) <= 1e-8);
  }
  CHECK_THROWS_AS(kde_level_set(kde, 0.0), InvalidSpec);
}

TEST_CASE("level_from_quantile is the nearest-rank density quantile") {
  KdeDensity kde(mixture_data(40, 8), 0.9);
  std::vector<double> dens;
  for (const auto& xi : kde.data()) dens.push_back(kde.value(xi));
  std::sort(dens.begin(), dens.end());
  CHECK(level_from_quantile(kde, 0.25) == dens[9]);   // ceil(10) - 1
  CHECK(level_from_quantile(kde, 0.5) == dens[19]);
  CHECK(level_from_quantile(kde, 0.025) == dens[0]);  // ceil(1) - 1
  CHECK(level_from_quantile(kde, 0.999) == dens[39]);
  CHECK_THROWS_AS(level_from_quantile(kde, 0.0), InvalidSpec);
  CHECK_THROWS_AS(level_from_quantile(kde, 1.0), InvalidSpec);
}

TEST_CASE("kde ridge: accepted points self-certify the ridge conditions") {
  KdeDensity kde(mixture_data(200, 42), 0.8);
  ModelInstance m = kde_ridge(kde, 1);
  CHECK(m.generator.codim == 1);
  REQUIRE(m.accept_filter);

  DescentConfig cfg;
  cfg.step = 100.0;
  cfg.max_iter = 50000;
  PointCloud cloud = sample_manifold(m.generator, WeightMatrix::identity(1),
                                     make_box({-4.0, -3.0}, {4.0, 3.0}), 50,
                                     cfg, 5, 1, m.accept_filter);
  REQUIRE(cloud.points.size() >= 20);
  for (const auto& x : cloud.points) {
    // |V_1^T grad p_hat| <= accept_tol by direct re-evaluation
    CHECK(eval_psi(m.generator, x).cwiseAbs().maxCoeff() <= 1e-8);
    // lambda_2 < 0 (ascending order: smallest of two eigenvalues)
    Eigen::SelfAdjointEigenSolver<Matrix> es(kde.hessian(x));
    REQUIRE(es.info() == Eigen::Success);
    CHECK(es.eigenvalues()[0] < 0.0);
    // FD Jacobians were trusted, so the eigengap must be healthy
    CHECK(ridge_eigengap(kde, 1, x) > 1e-8);
  }

  CHECK_THROWS_AS(kde_ridge(kde, -1), InvalidSpec);
  CHECK_THROWS_AS(kde_ridge(kde, 2), InvalidSpec);
  CHECK_THROWS_AS(ridge_eigengap(kde, 0, Vector::Zero(2)), InvalidSpec);
}

TEST_CASE("every analytic model Jacobian matches finite differences") {
  std::uniform_real_distribution<double> u01(0.05, 0.95);

  SUBCASE("gaussian tail") {
    ModelInstance m = gaussian_tail(-5.0, 2.0, 0.5);
    check_jacobian_fd(m.generator, [](std::mt19937_64& rng) {
      std::uniform_real_distribution<double> umu(-4.0, 1.5);
      std::uniform_real_distribution<double> usig(0.5, 6.0);
      return Vector((Vector(2) << umu(rng), usig(rng)).finished());
    });
  }
  SUBCASE("missing data") {
    ModelInstance m =
        missing_data({0.125, 0.125, 0.125, 0.125, 0.25, 0.25});
    check_jacobian_fd(m.generator, [u01](std::mt19937_64& rng) mutable {
      Vector th(7);
      for (int j = 0; j < 7; ++j) th[j] = u01(rng);
      return th;
    });
  }
  SUBCASE("fairness") {
    std::mt19937_64 trng(3);
    ModelInstance m = fairness(random_table(trng));
    check_jacobian_fd(m.generator, [u01](std::mt19937_64& rng) mutable {
      Vector q(4);
      for (int j = 0; j < 4; ++j) q[j] = u01(rng);
      return q;
    });
  }
  SUBCASE("moment model with analytic grads") {
    std::vector<Vector> data{(Vector(1) << 2.0).finished(),
                             (Vector(1) << -2.0).finished()};
    MomentFunction g;
    g.value = [](const Vector& y, const Vector& th) {
      return y[0] * y[0] - th[0] * th[0] - th[1] * th[1];
    };
    g.grad_theta = [](const Vector&, const Vector& th) {
      return Vector((Vector(2) << -2.0 * th[0], -2.0 * th[1]).finished());
    };
    ModelInstance m = moment_model({g}, data, 2);
    check_jacobian_fd(m.generator, [](std::mt19937_64& rng) {
      std::uniform_real_distribution<double> u(-3.0, 3.0);
      return Vector((Vector(2) << u(rng), u(rng)).finished());
    });
  }
  SUBCASE("kde level set") {
    KdeDensity kde(mixture_data(60, 17), 0.8);
    ModelInstance m = kde_level_set(kde, 0.01);
    check_jacobian_fd(m.generator, [](std::mt19937_64& rng) {
      std::uniform_real_distribution<double> u(-3.0, 3.0);
      return Vector((Vector(2) << u(rng), u(rng)).finished());
    });
  }
  SUBCASE("normal2d level set") {
    ModelInstance m = normal2d_level_set(0.05);
    check_jacobian_fd(m.generator, [](std::mt19937_64& rng) {
      std::uniform_real_distribution<double> u(-3.0, 3.0);
      return Vector((Vector(2) << u(rng), u(rng)).finished());
    });
  }
}
