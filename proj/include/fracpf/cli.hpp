#pragma once

// Command-line surface: subcommand dispatch over the drivers, output emission
// and exit codes.
//
//   0 ok, 2 configuration, 3 solver failure, 4 check failure, 5 I/O.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fracpf/config.hpp"
#include "fracpf/output.hpp"

namespace fracpf {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitSolver = 3, kExitCheck = 4, kExitIo = 5 };

// Output root used when --out is absent.
inline constexpr const char* kOutRootEnv = "FRACPF_OUT_ROOT";

const std::vector<std::string>& subcommand_names();

struct DispatchOptions {
  std::filesystem::path out_dir;
  int jobs = 1;
  bool quiet = false;
};

struct DispatchResult {
  int exit_code = kExitOk;
  RunManifest manifest;
};

// --out wins; otherwise output.dir (default fracpf-out/<subcommand>), placed
// under $FRACPF_OUT_ROOT when that is set and the directory is relative.
std::filesystem::path resolve_output_dir(const std::string& cli_out, const std::string& config_dir,
                                         const std::string& subcommand);

// `config` may be null for selftest only. Always attempts to leave a manifest in
// options.out_dir.
DispatchResult dispatch(const std::string& subcommand, const RunConfig* config,
                        const DispatchOptions& options);

struct SelftestRow {
  std::string suite;
  std::string check;
  int samples = 0;
  int violations = 0;
  double worst = 0.0;
  double tolerance = 0.0;
  bool passed() const { return violations == 0; }
};

// Spectral and convex-analysis property suites on seeded random samples.
std::vector<SelftestRow> run_selftest(std::uint64_t seed);

int run_cli(int argc, char** argv);

}  // namespace fracpf
