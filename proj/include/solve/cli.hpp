#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace solve::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kNoResult = 3;
inline constexpr int kIoError = 4;

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // overrides the config seed
  int threads = 1;
  int min_points = 1;
  std::optional<int> max_attempts;  // total chains allowed across retries
};

int cmd_sample(const CliOptions& opts);
int cmd_mle(const CliOptions& opts);
int cmd_posterior(const CliOptions& opts);
int cmd_verify(const CliOptions& opts);

}  // namespace solve::cli
