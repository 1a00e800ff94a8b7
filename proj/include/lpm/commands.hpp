#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "lpm/io.hpp"

namespace lpm {

struct CommandOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  unsigned threads = 1;
};

// Each command reads a flat config, writes its artifacts and throws lpm::Error on failure.
void cmd_fit(const std::filesystem::path& config_path, const CommandOptions& options = {});
void cmd_simulate(const std::filesystem::path& config_path, const CommandOptions& options = {});
void cmd_select(const std::filesystem::path& config_path, const CommandOptions& options = {});
void cmd_layout(const std::filesystem::path& summary_path, const std::filesystem::path& output_path);

// Reads model, prior and sampler keys shared by fit and select.
ModelSpec read_model_spec(const KeyValueConfig& cfg);
PriorSpec read_prior(const KeyValueConfig& cfg);
SamplerConfig read_sampler(const KeyValueConfig& cfg, std::uint64_t seed);

// Full command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace lpm
