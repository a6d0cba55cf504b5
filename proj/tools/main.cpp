#include <CLI11.hpp>

#include "solve/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo gradient-descent toolkit for solution manifolds"};
  app.require_subcommand(1);

  solve::cli::CliOptions opts;
  std::uint64_t seed_arg = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed_arg, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--threads", opts.threads, "worker threads (1 = bitwise-deterministic)");
  };

  CLI::App* sample = app.add_subcommand("sample", "sample points on the solution manifold");
  add_common(sample);
  int min_points = 1;
  int max_attempts = 0;
  sample->add_option("--min-points", min_points, "retry initializations until this many accepted points");
  sample->add_option("--max-attempts", max_attempts, "total chain budget across retries");

  CLI::App* mle = app.add_subcommand("mle", "manifold-constrained maximum likelihood");
  add_common(mle);
  CLI::App* posterior = app.add_subcommand("posterior", "weighted posterior point cloud");
  add_common(posterior);
  CLI::App* verify = app.add_subcommand("verify", "recompute report numbers from exported artifacts");
  add_common(verify);

  CLI11_PARSE(app, argc, argv);

  if (seed_set) opts.seed = seed_arg;
  opts.min_points = min_points;
  if (max_attempts > 0) opts.max_attempts = max_attempts;

  if (sample->parsed()) return solve::cli::cmd_sample(opts);
  if (mle->parsed()) return solve::cli::cmd_mle(opts);
  if (posterior->parsed()) return solve::cli::cmd_posterior(opts);
  if (verify->parsed()) return solve::cli::cmd_verify(opts);
  return solve::cli::kConfigError;
}
