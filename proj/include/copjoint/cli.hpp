#pragma once

// Command orchestration behind the executable: each command loads the run
// config, applies command-line overrides, and writes its artifacts under the
// output directory.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace copjoint {

struct CliOptions {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool deterministic = false;
};

// runs one command, streaming human-readable progress to out; throws the
// library error types on failure (the executable maps them to exit codes)
void run_command(const CliOptions& opts, std::ostream& out);

}  // namespace copjoint
