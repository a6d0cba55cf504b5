#include "solve/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "solve/constrained_mle.hpp"
#include "solve/descent.hpp"
#include "solve/geometry.hpp"
#include "solve/models.hpp"
#include "solve/posterior.hpp"

namespace solve::cli {

namespace {

using nlohmann::json;

// ---- logging ----------------------------------------------------------------

int log_threshold() {
  static const int level = [] {
    const char* env = std::getenv("SOLVE_LOG");
    if (!env) return 2;  // warn
    const std::string s(env);
    if (s == "debug") return 0;
    if (s == "info") return 1;
    if (s == "warn") return 2;
    if (s == "error") return 3;
    return 2;
  }();
  return level;
}

void log_msg(int level, const std::string& msg) {
  static const char* names[] = {"debug", "info", "warn", "error"};
  if (level >= log_threshold()) {
    std::cerr << "solve [" << names[level] << "] " << msg << "\n";
  }
}

// ---- small formatting / io helpers -------------------------------------------

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc()) {
    throw IoError("cannot parse number: " + s);
  }
  return v;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidSpec("JSON parse error in " + path + ": " + e.what());
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

// One observation per row; a non-numeric first row is treated as a header.
std::vector<Vector> read_csv_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open data file " + path);
  }
  std::vector<Vector> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (first) {
      first = false;
      double probe = 0.0;
      auto res = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), probe);
      if (res.ec != std::errc()) continue;  // header
    }
    Vector v(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t j = 0; j < cells.size(); ++j) {
      v[static_cast<Eigen::Index>(j)] = parse_double(cells[j]);
    }
    rows.push_back(std::move(v));
  }
  if (rows.empty()) {
    throw IoError("data file " + path + " holds no observations");
  }
  return rows;
}

std::vector<double> read_csv_scalars(const std::string& path) {
  std::vector<double> out;
  for (const auto& v : read_csv_vectors(path)) out.push_back(v[0]);
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot write " + path);
  }
  return out;
}

// ---- SVG scatter ---------------------------------------------------------------

void write_svg(const std::string& path,
               const std::vector<Vector>& points, int cx, int cy,
               const std::vector<bool>* highlight) {
  constexpr double kSize = 520.0, kMargin = 50.0;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : points) {
    xmin = std::min(xmin, p[cx]);
    xmax = std::max(xmax, p[cx]);
    ymin = std::min(ymin, p[cy]);
    ymax = std::max(ymax, p[cy]);
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  auto sx = [&](double x) {
    return kMargin + (x - xmin) / (xmax - xmin) * (kSize - 2 * kMargin);
  };
  auto sy = [&](double y) {
    return kSize - kMargin - (y - ymin) / (ymax - ymin) * (kSize - 2 * kMargin);
  };
  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize
      << "\" height=\"" << kSize << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\""
      << kSize - 2 * kMargin << "\" height=\"" << kSize - 2 * kMargin
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const bool hot = highlight && (*highlight)[i];
    out << "<circle cx=\"" << sx(points[i][cx]) << "\" cy=\"" << sy(points[i][cy])
        << "\" r=\"2\" fill=\"" << (hot ? "crimson" : "steelblue") << "\"/>\n";
  }
  out << "<text x=\"" << kMargin << "\" y=\"" << kSize - 12 << "\" font-size=\"12\">["
      << fmt_double(xmin) << ", " << fmt_double(xmax) << "] x["
      << fmt_double(ymin) << ", " << fmt_double(ymax) << "]</text>\n</svg>\n";
}

// ---- config parsing ----------------------------------------------------------

Vector json_vector(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

struct ModelBundle {
  ModelInstance model;
  // Objective for mle runs; set only where the model defines one.
  std::function<ObjectiveSpec(const json& mle_cfg)> make_objective;
  // Log-likelihood factory for posterior runs (from a data path).
  std::function<std::function<double(const Vector&)>(const std::string& data_path)> make_loglik;
};

std::array<std::int64_t, 6> counts_from_json(const json& j) {
  static const char* keys[6] = {"p111", "p101", "p011", "p001", "p0r0", "p1r0"};
  std::array<std::int64_t, 6> counts{};
  for (int i = 0; i < 6; ++i) {
    if (!j.contains(keys[i])) {
      throw InvalidSpec(std::string("counts object missing cell ") + keys[i]);
    }
    counts[static_cast<std::size_t>(i)] = j[keys[i]].get<std::int64_t>();
  }
  return counts;
}

ModelBundle build_model(const json& jm) {
  const std::string type = jm.at("type").get<std::string>();
  ModelBundle b;
  if (type == "gaussian_tail") {
    b.model = gaussian_tail(jm.at("r0").get<double>(), jm.at("r1").get<double>(),
                            jm.at("s0").get<double>());
    b.make_objective = [](const json& mle_cfg) {
      return gaussian_loglik(read_csv_scalars(mle_cfg.at("data_path").get<std::string>()));
    };
    b.make_loglik = [](const std::string& path) {
      std::vector<double> data = read_csv_scalars(path);
      ObjectiveSpec obj = gaussian_loglik(data);
      // gaussian_loglik averages over observations; the posterior needs the
      // full log-likelihood sum
      const double n = static_cast<double>(data.size());
      return [obj, n](const Vector& th) { return n * obj.value(th); };
    };
  } else if (type == "missing_data") {
    if (jm.contains("targets")) {
      std::array<double, 6> t{};
      for (int i = 0; i < 6; ++i) t[static_cast<std::size_t>(i)] = jm["targets"][static_cast<std::size_t>(i)].get<double>();
      b.model = missing_data(t);
    } else if (jm.contains("counts")) {
      b.model = missing_data_from_counts(counts_from_json(jm["counts"]));
    } else if (jm.contains("counts_path")) {
      b.model = missing_data_from_counts(
          counts_from_json(load_json_file(jm["counts_path"].get<std::string>())));
    } else {
      throw InvalidSpec("missing_data model needs targets, counts, or counts_path");
    }
  } else if (type == "fairness") {
    const auto& t = jm.at("table");  // flat array, index = 4a + 2w + y
    if (t.size() != 8) {
      throw InvalidSpec("fairness table must hold 8 entries ordered (a,w,y)");
    }
    FairnessTable table;
    for (int a = 0; a < 2; ++a)
      for (int w = 0; w < 2; ++w)
        for (int y = 0; y < 2; ++y)
          table.p[a][w][y] = t[static_cast<std::size_t>(4 * a + 2 * w + y)].get<double>();
    b.model = fairness(table);
    b.make_objective = [table](const json& mle_cfg) {
      const double pa1 = mle_cfg.value("a1_marginal", 0.5);
      return fairness_negative_risk(table, pa1);
    };
  } else if (type == "gaussian_second_moment") {
    // g(y; theta) = y^2 - mu^2 - sigma^2: the empirical identified set is the
    // circle mu^2 + sigma^2 = mean(y^2).
    auto data = read_csv_vectors(jm.at("data_path").get<std::string>());
    MomentFunction fn;
    fn.value = [](const Vector& y, const Vector& theta) {
      return y[0] * y[0] - theta[0] * theta[0] - theta[1] * theta[1];
    };
    fn.grad_theta = [](const Vector&, const Vector& theta) {
      Vector g(2);
      g[0] = -2.0 * theta[0];
      g[1] = -2.0 * theta[1];
      return g;
    };
    b.model = moment_model({fn}, std::move(data), 2);
    b.model.name = "gaussian_second_moment";
  } else if (type == "mean_moment") {
    auto data = read_csv_vectors(jm.at("data_path").get<std::string>());
    const int dim = jm.value("dim", 2);
    MomentFunction fn;
    fn.value = [](const Vector& y, const Vector& theta) { return y[0] - theta[0]; };
    fn.grad_theta = [dim](const Vector&, const Vector&) {
      Vector g = Vector::Zero(dim);
      g[0] = -1.0;
      return g;
    };
    b.model = moment_model({fn}, std::move(data), dim);
    b.model.name = "mean_moment";
  } else if (type == "kde_level_set" || type == "kde_ridge") {
    auto data = read_csv_vectors(jm.at("data_path").get<std::string>());
    KdeDensity kde(std::move(data), jm.at("bandwidth").get<double>());
    if (type == "kde_level_set") {
      double level;
      if (jm.contains("level")) {
        level = jm["level"].get<double>();
      } else if (jm.contains("quantile")) {
        level = level_from_quantile(kde, jm["quantile"].get<double>());
      } else {
        throw InvalidSpec("kde_level_set needs level or quantile");
      }
      b.model = kde_level_set(kde, level);
    } else {
      b.model = kde_ridge(kde, jm.at("k").get<int>());
    }
  } else {
    throw InvalidSpec("unknown model type: " + type);
  }
  return b;
}

DescentConfig parse_solver(const json& j) {
  DescentConfig cfg;
  if (j.contains("step")) cfg.step = j["step"].get<double>();
  if (j.contains("max_iter")) cfg.max_iter = j["max_iter"].get<int>();
  if (j.contains("grad_tol")) cfg.grad_tol = j["grad_tol"].get<double>();
  if (j.contains("accept_tol")) cfg.accept_tol = j["accept_tol"].get<double>();
  if (j.contains("backtracking")) {
    Backtracking bt;
    bt.shrink = j["backtracking"].value("shrink", 0.5);
    bt.max_halvings = j["backtracking"].value("max_halvings", 30);
    cfg.backtracking = bt;
  }
  if (cfg.step <= 0.0 || cfg.grad_tol <= 0.0 || cfg.accept_tol <= 0.0 ||
      cfg.max_iter < 1) {
    throw InvalidSpec("solver config requires positive step, tolerances, max_iter");
  }
  return cfg;
}

InitDistribution parse_init(const json& j, int dim) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "uniform_box") {
    UniformBox box{json_vector(j.at("lower")), json_vector(j.at("upper"))};
    if (box.lower.size() != dim || box.upper.size() != dim ||
        !(box.lower.array() < box.upper.array()).all()) {
      throw InvalidSpec("uniform_box bounds must have model dimension with lower < upper");
    }
    return box;
  }
  if (type == "points") {
    ExplicitPoints pts;
    for (const auto& row : j.at("points")) {
      Vector p = json_vector(row);
      if (p.size() != dim) {
        throw InvalidSpec("explicit point has wrong dimension");
      }
      pts.points.push_back(std::move(p));
    }
    if (pts.points.empty()) {
      throw InvalidSpec("explicit points list is empty");
    }
    return pts;
  }
  throw InvalidSpec("unknown init type: " + type);
}

PriorSpec parse_prior(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "flat") {
    return PriorSpec{[](const Vector&) { return 0.0; }};
  }
  if (type == "gaussian") {
    Vector mean = json_vector(j.at("mean"));
    Vector sd = json_vector(j.at("sd"));
    if (mean.size() != sd.size() || (sd.array() <= 0.0).any()) {
      throw InvalidSpec("gaussian prior needs matching mean/sd with sd > 0");
    }
    return PriorSpec{[mean, sd](const Vector& x) {
      double acc = 0.0;
      for (int i = 0; i < mean.size(); ++i) {
        const double z = (x[i] - mean[i]) / sd[i];
        acc -= 0.5 * z * z;
      }
      return acc;
    }};
  }
  throw InvalidSpec("unknown prior type: " + type);
}

struct RunContext {
  json config;
  ModelBundle bundle;
  DescentConfig solver;
  InitDistribution init;
  int n_chains = 0;
  std::uint64_t seed = 0;
  json outputs;
};

RunContext load_context(const CliOptions& opts) {
  RunContext ctx;
  ctx.config = load_json_file(opts.config_path);
  ctx.bundle = build_model(ctx.config.at("model"));
  ctx.solver = parse_solver(ctx.config.value("solver", json::object()));
  ctx.init = parse_init(ctx.config.at("init"), ctx.bundle.model.generator.dim);
  ctx.n_chains = ctx.config.value("n_chains", 0);
  if (ctx.n_chains < 1) {
    throw InvalidSpec("n_chains must be >= 1");
  }
  ctx.seed = opts.seed ? *opts.seed : ctx.config.value("seed", std::uint64_t{1});
  ctx.outputs = ctx.config.value("outputs", json::object());
  return ctx;
}

// Repeats sampling batches (reseeded deterministically) until min_points
// accepted points or the attempt budget is exhausted.
PointCloud sample_with_retries(const RunContext& ctx, const CliOptions& opts,
                               std::vector<std::uint64_t>* batch_seeds) {
  PointCloud combined;
  combined.seed = ctx.seed;
  const int max_attempts = opts.max_attempts ? *opts.max_attempts : ctx.n_chains;
  int batch = 0;
  while (true) {
    const std::uint64_t bseed = ctx.seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(batch);
    if (batch_seeds) batch_seeds->push_back(bseed);
    try {
      PointCloud cloud = sample_manifold(ctx.bundle.model.generator,
                                         WeightMatrix::identity(ctx.bundle.model.generator.codim),
                                         ctx.init, ctx.n_chains, ctx.solver, bseed,
                                         opts.threads, ctx.bundle.model.accept_filter);
      for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        combined.points.push_back(cloud.points[i]);
        combined.residuals.push_back(cloud.residuals[i]);
        combined.iterations.push_back(cloud.iterations[i]);
        combined.chain_indices.push_back(cloud.chain_indices[i] + batch * ctx.n_chains);
      }
    } catch (const NoAcceptedPoints&) {
      // batch produced nothing; fall through to the budget check
    }
    combined.attempts += ctx.n_chains;
    ++batch;
    if (static_cast<int>(combined.points.size()) >= std::max(1, opts.min_points)) break;
    if (combined.attempts >= max_attempts) break;
  }
  if (combined.points.empty()) {
    throw NoAcceptedPoints("no accepted points after " +
                           std::to_string(combined.attempts) + " attempts");
  }
  return combined;
}

void write_cloud_csv(const std::string& path, const PointCloud& cloud, int dim) {
  auto out = open_out(path);
  for (int j = 0; j < dim; ++j) out << "x" << j << ",";
  out << "residual,iterations\n";
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    for (int j = 0; j < dim; ++j) out << fmt_double(cloud.points[i][j]) << ",";
    out << fmt_double(cloud.residuals[i]) << "," << cloud.iterations[i] << "\n";
  }
}

PointCloud read_cloud_csv(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open cloud file " + path);
  }
  PointCloud cloud;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != dim + 2) {
      throw IoError("cloud row has wrong column count in " + path);
    }
    Vector x(dim);
    for (int j = 0; j < dim; ++j) x[j] = parse_double(cells[static_cast<std::size_t>(j)]);
    cloud.points.push_back(std::move(x));
    cloud.residuals.push_back(parse_double(cells[static_cast<std::size_t>(dim)]));
    cloud.iterations.push_back(static_cast<int>(parse_double(cells[static_cast<std::size_t>(dim) + 1])));
  }
  return cloud;
}

struct RateSummary {
  double median_rate = 0.0;
  double median_r_squared = 0.0;
  int fitted = 0;
};

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

RateSummary summarize_rates(const std::vector<std::vector<double>>& traces) {
  std::vector<double> rates, r2s;
  for (const auto& tr : traces) {
    try {
      RateFit fit = fit_convergence_rate(tr);
      rates.push_back(fit.rate);
      r2s.push_back(fit.r_squared);
    } catch (const InsufficientTrace&) {
    }
  }
  RateSummary s;
  if (!rates.empty()) {
    s.median_rate = median_of(rates);
    s.median_r_squared = median_of(r2s);
    s.fitted = static_cast<int>(rates.size());
  }
  return s;
}

int classify_error(const SolveError& e) {
  if (dynamic_cast<const IoError*>(&e)) return kIoError;
  if (dynamic_cast<const NoAcceptedPoints*>(&e) ||
      dynamic_cast<const NoConvergedRuns*>(&e) ||
      dynamic_cast<const NotConverged*>(&e) ||
      dynamic_cast<const NonFiniteScore*>(&e)) {
    return kNoResult;
  }
  return kConfigError;
}

}  // namespace

// ---- sample --------------------------------------------------------------------

int cmd_sample(const CliOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    RunContext ctx = load_context(opts);
    std::vector<std::uint64_t> batch_seeds;
    PointCloud cloud = sample_with_retries(ctx, opts, &batch_seeds);
    log_msg(1, "accepted " + std::to_string(cloud.points.size()) + " of " +
                   std::to_string(cloud.attempts) + " chains");

    const int dim = ctx.bundle.model.generator.dim;
    if (ctx.outputs.contains("cloud_path")) {
      write_cloud_csv(ctx.outputs["cloud_path"].get<std::string>(), cloud, dim);
    }

    json report;
    report["command"] = "sample";
    report["model"] = ctx.bundle.model.name;
    report["attempts"] = cloud.attempts;
    report["accepted"] = cloud.points.size();
    report["acceptance_rate"] = acceptance_rate(cloud);
    SmoothnessReport smooth = estimate_smoothness(ctx.bundle.model.generator, cloud);
    report["smoothness"] = {{"sigma_min", smooth.sigma_min},
                            {"lambda0_hat", smooth.lambda0_hat},
                            {"rank_deficient", smooth.rank_deficient}};

    if (ctx.outputs.contains("trace_path")) {
      // Re-run the accepted chains to export their objective traces.
      const WeightMatrix lam = WeightMatrix::identity(ctx.bundle.model.generator.codim);
      auto out = open_out(ctx.outputs["trace_path"].get<std::string>());
      out << "chain,step,f\n";
      std::vector<std::vector<double>> traces;
      for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const int global = cloud.chain_indices[i];
        const int batch = global / ctx.n_chains;
        const int local = global % ctx.n_chains;
        Vector x0 = draw_init(ctx.init, batch_seeds[static_cast<std::size_t>(batch)], local);
        DescentResult r = descend(ctx.bundle.model.generator, lam, x0, ctx.solver);
        for (std::size_t t = 0; t < r.trace.size(); ++t) {
          out << global << "," << t << "," << fmt_double(r.trace[t]) << "\n";
        }
        traces.push_back(std::move(r.trace));
      }
      RateSummary rates = summarize_rates(traces);
      report["rate_fit"] = {{"median_rate", rates.median_rate},
                            {"median_r_squared", rates.median_r_squared},
                            {"fitted_chains", rates.fitted}};
    }

    if (ctx.outputs.contains("plot_path") && dim >= 2) {
      int cx = 0, cy = 1;
      if (ctx.config.contains("plot_coords")) {
        cx = ctx.config["plot_coords"][0].get<int>();
        cy = ctx.config["plot_coords"][1].get<int>();
      }
      write_svg(ctx.outputs["plot_path"].get<std::string>(), cloud.points, cx, cy, nullptr);
    }

    report["timing_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report["config"] = ctx.config;
    if (ctx.outputs.contains("report_path")) {
      open_out(ctx.outputs["report_path"].get<std::string>()) << report.dump(2) << "\n";
    }
    return kOk;
  } catch (const SolveError& e) {
    log_msg(3, e.what());
    return classify_error(e);
  } catch (const json::exception& e) {
    log_msg(3, e.what());
    return kConfigError;
  }
}

// ---- mle -----------------------------------------------------------------------

int cmd_mle(const CliOptions& opts) {
  try {
    RunContext ctx = load_context(opts);
    if (!ctx.config.contains("mle")) {
      throw InvalidSpec("mle command requires an mle config section");
    }
    const json& jm = ctx.config["mle"];
    if (!ctx.bundle.make_objective) {
      throw InvalidSpec("model " + ctx.bundle.model.name + " has no mle objective");
    }
    ObjectiveSpec obj = ctx.bundle.make_objective(jm);

    MleConfig cfg;
    cfg.ascent_step = jm.value("ascent_step", 0.1);
    cfg.tangent_tol = jm.value("tangent_tol", 1e-6);
    cfg.max_outer = jm.value("max_outer", 500);
    cfg.descent = ctx.solver;
    if (cfg.ascent_step <= 0.0 || cfg.tangent_tol <= 0.0) {
      throw InvalidSpec("mle requires positive ascent_step and tangent_tol");
    }
    const int n_starts = jm.value("n_starts", 1);

    MultiStartMleResult ms =
        multi_start_mle(ctx.bundle.model.generator,
                        WeightMatrix::identity(ctx.bundle.model.generator.codim),
                        obj, ctx.init, n_starts, cfg, ctx.seed);

    auto result_json = [](const MleResult& r) {
      json out;
      out["theta"] = std::vector<double>(r.theta.data(), r.theta.data() + r.theta.size());
      out["value"] = r.value;
      out["outer_iters"] = r.outer_iters;
      out["tangential_grad_norm"] = r.tangential_grad_norm;
      out["converged"] = r.converged;
      return out;
    };
    json report;
    report["command"] = "mle";
    report["best"] = result_json(ms.best);
    report["all"] = json::array();
    for (const auto& r : ms.all) report["all"].push_back(result_json(r));
    report["config"] = ctx.config;
    if (ctx.outputs.contains("report_path")) {
      open_out(ctx.outputs["report_path"].get<std::string>()) << report.dump(2) << "\n";
    }
    if (ctx.outputs.contains("trace_path")) {
      auto out = open_out(ctx.outputs["trace_path"].get<std::string>());
      const int dim = ctx.bundle.model.generator.dim;
      out << "start,iter";
      for (int j = 0; j < dim; ++j) out << ",x" << j;
      out << ",value\n";
      for (std::size_t s = 0; s < ms.all.size(); ++s) {
        for (std::size_t t = 0; t < ms.all[s].trajectory.size(); ++t) {
          out << s << "," << t;
          const auto& [theta, value] = ms.all[s].trajectory[t];
          for (int j = 0; j < dim; ++j) out << "," << fmt_double(theta[j]);
          out << "," << fmt_double(value) << "\n";
        }
      }
    }
    return kOk;
  } catch (const SolveError& e) {
    log_msg(3, e.what());
    return classify_error(e);
  } catch (const json::exception& e) {
    log_msg(3, e.what());
    return kConfigError;
  }
}

// ---- posterior -------------------------------------------------------------------

int cmd_posterior(const CliOptions& opts) {
  try {
    RunContext ctx = load_context(opts);
    if (!ctx.config.contains("posterior")) {
      throw InvalidSpec("posterior command requires a posterior config section");
    }
    const json& jp = ctx.config["posterior"];
    PriorSpec prior = parse_prior(jp.at("prior"));
    const double alpha = jp.value("alpha", 0.1);
    if (alpha <= 0.0 || alpha >= 1.0) {
      throw InvalidSpec("posterior alpha must lie in (0,1)");
    }
    std::function<double(const Vector&)> loglik;
    if (jp.contains("data_path")) {
      if (!ctx.bundle.make_loglik) {
        throw InvalidSpec("model " + ctx.bundle.model.name + " has no likelihood");
      }
      loglik = ctx.bundle.make_loglik(jp["data_path"].get<std::string>());
    }

    PointCloud cloud = sample_with_retries(ctx, opts, nullptr);
    double h;
    if (!jp.contains("bandwidth") || (jp["bandwidth"].is_string() &&
                                      jp["bandwidth"].get<std::string>() == "silverman")) {
      h = silverman_bandwidth(cloud.points);
    } else {
      h = jp["bandwidth"].get<double>();
    }
    WeightedPointCloud w = posterior_weights(cloud.points, prior, loglik, h);
    CredibleRegion region = credible_region(w, alpha);
    Vector mean = posterior_mean(w);
    IndexedPoint map_pt = map_estimate(w);
    IndexedPoint frechet_pt = frechet_mean(w);

    const int dim = ctx.bundle.model.generator.dim;
    std::vector<bool> in_region(w.points.size(), false);
    for (std::size_t idx : region.member_indices) in_region[idx] = true;

    if (ctx.outputs.contains("cloud_path")) {
      auto out = open_out(ctx.outputs["cloud_path"].get<std::string>());
      for (int j = 0; j < dim; ++j) out << "x" << j << ",";
      out << "rho,log_pi,log_omega,in_region\n";
      for (std::size_t i = 0; i < w.points.size(); ++i) {
        for (int j = 0; j < dim; ++j) out << fmt_double(w.points[i][j]) << ",";
        out << fmt_double(w.rho[i]) << "," << fmt_double(w.log_pi[i]) << ","
            << fmt_double(w.log_omega[i]) << "," << (in_region[i] ? 1 : 0) << "\n";
      }
    }
    if (ctx.outputs.contains("plot_path") && dim >= 2) {
      write_svg(ctx.outputs["plot_path"].get<std::string>(), w.points, 0, 1, &in_region);
    }

    json report;
    report["command"] = "posterior";
    report["bandwidth"] = h;
    report["posterior_mean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
    report["map"] = {{"index", map_pt.index},
                     {"point", std::vector<double>(map_pt.point.data(),
                                                   map_pt.point.data() + map_pt.point.size())}};
    report["frechet_mean"] = {{"index", frechet_pt.index},
                              {"point", std::vector<double>(frechet_pt.point.data(),
                                                            frechet_pt.point.data() +
                                                                frechet_pt.point.size())}};
    report["credible_region"] = {{"alpha", alpha},
                                 {"size", region.member_indices.size()},
                                 {"cutoff_log_pi", region.cutoff_log_pi}};
    report["config"] = ctx.config;
    if (ctx.outputs.contains("report_path")) {
      open_out(ctx.outputs["report_path"].get<std::string>()) << report.dump(2) << "\n";
    }
    return kOk;
  } catch (const SolveError& e) {
    log_msg(3, e.what());
    return classify_error(e);
  } catch (const json::exception& e) {
    log_msg(3, e.what());
    return kConfigError;
  }
}

// ---- verify -----------------------------------------------------------------------

namespace {

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

int verify_sample(const RunContext& ctx, const json& report) {
  const int dim = ctx.bundle.model.generator.dim;
  PointCloud cloud = read_cloud_csv(ctx.outputs.at("cloud_path").get<std::string>(), dim);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const double res = max_abs_residual(ctx.bundle.model.generator, cloud.points[i]);
    if (!close(res, cloud.residuals[i], 1e-12)) {
      log_msg(3, "residual mismatch at row " + std::to_string(i));
      return kNoResult;
    }
  }
  cloud.attempts = report.at("attempts").get<int>();
  if (!close(acceptance_rate(cloud), report.at("acceptance_rate").get<double>(), 1e-9)) {
    log_msg(3, "acceptance_rate mismatch");
    return kNoResult;
  }
  SmoothnessReport smooth = estimate_smoothness(ctx.bundle.model.generator, cloud);
  if (!close(smooth.sigma_min, report.at("smoothness").at("sigma_min").get<double>(), 1e-9) ||
      !close(smooth.lambda0_hat, report.at("smoothness").at("lambda0_hat").get<double>(), 1e-9)) {
    log_msg(3, "smoothness mismatch");
    return kNoResult;
  }
  if (report.contains("rate_fit") && ctx.outputs.contains("trace_path")) {
    std::ifstream in(ctx.outputs["trace_path"].get<std::string>());
    if (!in) throw IoError("cannot open trace file");
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> traces;
    int cur = -1;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto cells = split_csv_line(line);
      const int chain = static_cast<int>(parse_double(cells[0]));
      if (chain != cur) {
        traces.emplace_back();
        cur = chain;
      }
      traces.back().push_back(parse_double(cells[2]));
    }
    RateSummary rates = summarize_rates(traces);
    if (!close(rates.median_rate, report["rate_fit"]["median_rate"].get<double>(), 1e-9) ||
        !close(rates.median_r_squared, report["rate_fit"]["median_r_squared"].get<double>(), 1e-9)) {
      log_msg(3, "rate_fit mismatch");
      return kNoResult;
    }
  }
  std::cout << "verify: OK (sample)\n";
  return kOk;
}

int verify_posterior(const RunContext& ctx, const json& report) {
  const int dim = ctx.bundle.model.generator.dim;
  std::ifstream in(ctx.outputs.at("cloud_path").get<std::string>());
  if (!in) throw IoError("cannot open posterior cloud");
  std::string line;
  std::getline(in, line);
  WeightedPointCloud w;
  std::vector<int> stored_region;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    Vector x(dim);
    for (int j = 0; j < dim; ++j) x[j] = parse_double(cells[static_cast<std::size_t>(j)]);
    w.points.push_back(std::move(x));
    w.rho.push_back(parse_double(cells[static_cast<std::size_t>(dim)]));
    w.log_pi.push_back(parse_double(cells[static_cast<std::size_t>(dim) + 1]));
    w.log_omega.push_back(parse_double(cells[static_cast<std::size_t>(dim) + 2]));
    stored_region.push_back(static_cast<int>(parse_double(cells[static_cast<std::size_t>(dim) + 3])));
  }
  w.bandwidth = report.at("bandwidth").get<double>();

  Vector mean = posterior_mean(w);
  for (int j = 0; j < dim; ++j) {
    if (!close(mean[j], report.at("posterior_mean")[static_cast<std::size_t>(j)].get<double>(), 1e-9)) {
      log_msg(3, "posterior_mean mismatch");
      return kNoResult;
    }
  }
  if (map_estimate(w).index != report.at("map").at("index").get<std::size_t>() ||
      frechet_mean(w).index != report.at("frechet_mean").at("index").get<std::size_t>()) {
    log_msg(3, "MAP or Frechet index mismatch");
    return kNoResult;
  }
  CredibleRegion region = credible_region(w, report.at("credible_region").at("alpha").get<double>());
  if (region.member_indices.size() != report.at("credible_region").at("size").get<std::size_t>()) {
    log_msg(3, "credible region size mismatch");
    return kNoResult;
  }
  std::vector<int> recomputed(w.points.size(), 0);
  for (std::size_t idx : region.member_indices) recomputed[idx] = 1;
  if (recomputed != stored_region) {
    log_msg(3, "credible region membership mismatch");
    return kNoResult;
  }
  std::cout << "verify: OK (posterior)\n";
  return kOk;
}

int verify_mle(const RunContext& ctx, const json& report) {
  if (!ctx.bundle.make_objective) {
    throw InvalidSpec("cannot verify mle report without an objective");
  }
  ObjectiveSpec obj = ctx.bundle.make_objective(ctx.config.at("mle"));
  const json& best = report.at("best");
  Vector theta = json_vector(best.at("theta"));
  if (max_abs_residual(ctx.bundle.model.generator, theta) > ctx.solver.accept_tol) {
    log_msg(3, "reported theta is off the manifold");
    return kNoResult;
  }
  if (!close(obj.value(theta), best.at("value").get<double>(), 1e-9)) {
    log_msg(3, "objective value mismatch");
    return kNoResult;
  }
  const double tnorm = tangential_gradient_norm(ctx.bundle.model.generator, theta,
                                                obj.gradient(theta));
  if (!close(tnorm, best.at("tangential_grad_norm").get<double>(), 1e-9)) {
    log_msg(3, "tangential gradient norm mismatch");
    return kNoResult;
  }
  std::cout << "verify: OK (mle)\n";
  return kOk;
}

}  // namespace

int cmd_verify(const CliOptions& opts) {
  try {
    RunContext ctx = load_context(opts);
    if (!ctx.outputs.contains("report_path")) {
      throw InvalidSpec("verify requires outputs.report_path");
    }
    json report = load_json_file(ctx.outputs["report_path"].get<std::string>());
    const std::string command = report.at("command").get<std::string>();
    if (command == "sample") return verify_sample(ctx, report);
    if (command == "posterior") return verify_posterior(ctx, report);
    if (command == "mle") return verify_mle(ctx, report);
    throw InvalidSpec("unknown report command: " + command);
  } catch (const SolveError& e) {
    log_msg(3, e.what());
    return classify_error(e);
  } catch (const json::exception& e) {
    log_msg(3, e.what());
    return kConfigError;
  }
}

}  // namespace solve::cli
