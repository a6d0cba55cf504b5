#include "solve/descent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace solve {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over seed + golden-ratio stride per stream
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Vector draw_init(const InitDistribution& init, std::uint64_t seed, int chain_index) {
  if (const auto* pts = std::get_if<ExplicitPoints>(&init)) {
    if (pts->points.empty()) {
      throw InvalidSpec("ExplicitPoints initialization is empty");
    }
    return pts->points[static_cast<std::size_t>(chain_index) % pts->points.size()];
  }
  const auto& box = std::get<UniformBox>(init);
  if (box.lower.size() != box.upper.size() ||
      !(box.lower.array() < box.upper.array()).all()) {
    throw InvalidSpec("UniformBox requires lower < upper componentwise");
  }
  std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(chain_index)));
  Vector x(box.lower.size());
  for (int j = 0; j < x.size(); ++j) {
    std::uniform_real_distribution<double> dist(box.lower[j], box.upper[j]);
    x[j] = dist(rng);
  }
  return x;
}

DescentResult descend(const GeneratorSpec& g, const WeightMatrix& lam,
                      const Vector& x0, const DescentConfig& cfg) {
  if (cfg.step <= 0.0 || cfg.grad_tol <= 0.0 || cfg.accept_tol <= 0.0) {
    throw InvalidSpec("descent config requires positive step and tolerances");
  }
  DescentResult res;
  Vector x = x0;
  double f_cur = objective(g, lam, x);  // DomainError here: x0 itself invalid
  res.trace.push_back(f_cur);

  bool forced_reject = false;
  for (int t = 0; t < cfg.max_iter; ++t) {
    Vector grad = grad_objective(g, lam, x);
    if (grad.norm() <= cfg.grad_tol) break;

    double step = cfg.step;
    Vector x_next;
    double f_next = 0.0;
    bool moved = false;
    if (cfg.backtracking) {
      const auto& bt = *cfg.backtracking;
      const double gg = grad.squaredNorm();
      for (int k = 0; k <= bt.max_halvings; ++k) {
        x_next = x - step * grad;
        if (x_next.allFinite()) {
          try {
            f_next = objective(g, lam, x_next);
            // Armijo sufficient decrease; plain f_next <= f_cur admits 2-cycles
            if (std::isfinite(f_next) && f_next <= f_cur - 1e-4 * step * gg) {
              moved = true;
              break;
            }
          } catch (const DomainError&) {
            // shrink and retry
          }
        }
        step *= bt.shrink;
      }
      if (!moved) break;  // no admissible step left; stop at the current point
    } else {
      x_next = x - step * grad;
      if (!x_next.allFinite()) {
        throw NonFiniteIterate("descent produced a non-finite iterate");
      }
      try {
        f_next = objective(g, lam, x_next);
      } catch (const DomainError&) {
        forced_reject = true;  // iterate left the domain: chain rejected
        break;
      }
      if (!std::isfinite(f_next)) {
        throw NonFiniteIterate("objective diverged to a non-finite value");
      }
      moved = true;
    }

    Vector delta = x_next - x;
    const double dn = delta.norm();
    if (dn > 0.0) res.final_step_dir = delta / dn;
    x = x_next;
    f_cur = f_next;
    res.trace.push_back(f_cur);
    res.iterations = t + 1;
  }

  res.x_final = x;
  res.residual = max_abs_residual(g, x);
  res.accepted = !forced_reject && res.residual <= cfg.accept_tol;
  return res;
}

PointCloud sample_manifold(const GeneratorSpec& g, const WeightMatrix& lam,
                           const InitDistribution& init, int n_chains,
                           const DescentConfig& cfg, std::uint64_t seed,
                           int threads,
                           const std::function<bool(const Vector&)>& extra_accept) {
  if (n_chains < 1) {
    throw InvalidSpec("sample_manifold requires n_chains >= 1");
  }
  struct ChainOut {
    bool accepted = false;
    Vector x;
    double residual = 0.0;
    int iterations = 0;
  };
  std::vector<ChainOut> outs(static_cast<std::size_t>(n_chains));

  auto run_range = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      ChainOut& out = outs[static_cast<std::size_t>(i)];
      try {
        Vector x0 = draw_init(init, seed, i);
        DescentResult r = descend(g, lam, x0, cfg);
        out.x = r.x_final;
        out.residual = r.residual;
        out.iterations = r.iterations;
        out.accepted = r.accepted && (!extra_accept || extra_accept(r.x_final));
      } catch (const DomainError&) {
        out.accepted = false;
        out.residual = std::numeric_limits<double>::infinity();
      } catch (const NonFiniteIterate&) {
        out.accepted = false;
        out.residual = std::numeric_limits<double>::infinity();
      }
    }
  };

  threads = std::max(1, threads);
  if (threads == 1 || n_chains == 1) {
    run_range(0, n_chains);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_chains + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(n_chains, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  PointCloud cloud;
  cloud.attempts = n_chains;
  cloud.seed = seed;
  for (int i = 0; i < n_chains; ++i) {
    const auto& out = outs[static_cast<std::size_t>(i)];
    if (out.accepted) {
      cloud.points.push_back(out.x);
      cloud.residuals.push_back(out.residual);
      cloud.iterations.push_back(out.iterations);
      cloud.chain_indices.push_back(i);
    }
  }
  if (cloud.points.empty()) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& out : outs) best = std::min(best, out.residual);
    throw NoAcceptedPoints("all " + std::to_string(n_chains) +
                           " chains rejected; smallest residual " +
                           std::to_string(best));
  }
  return cloud;
}

RateFit fit_convergence_rate(const std::vector<double>& trace) {
  std::vector<double> ts, ys;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    if (trace[t] > 1e-14) {
      ts.push_back(static_cast<double>(t));
      ys.push_back(std::log(trace[t]));
    }
  }
  const std::size_t n = ts.size();
  if (n < 5) {
    throw InsufficientTrace("need at least 5 trace entries above the machine floor");
  }
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tm += ts[i];
    ym += ys[i];
  }
  tm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    stt += (ts[i] - tm) * (ts[i] - tm);
    sty += (ts[i] - tm) * (ys[i] - ym);
    syy += (ys[i] - ym) * (ys[i] - ym);
  }
  const double slope = sty / stt;
  double r2 = 1.0;
  if (syy > 0.0) {
    const double ss_res = syy - slope * sty;
    r2 = 1.0 - ss_res / syy;
  }
  return RateFit{std::exp(slope), r2};
}

double acceptance_rate(const PointCloud& cloud) {
  if (cloud.attempts < 1) {
    throw InvalidSpec("acceptance_rate requires at least one attempt");
  }
  return static_cast<double>(cloud.points.size()) /
         static_cast<double>(cloud.attempts);
}

}  // namespace solve
