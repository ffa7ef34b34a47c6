#ifndef CALDERON_RUNNER_HPP
#define CALDERON_RUNNER_HPP

#include <string>

namespace calderon {

/// Result of one CLI run. exit_code: 0 when every check in the summary
/// passed, 1 when a check failed or a computation error occurred, 2 for
/// config/invocation errors. out_dir is the created run directory (empty
/// when the run failed before creating it). summary mirrors summary.txt.
struct RunOutcome {
  int exit_code = 2;
  std::string out_dir;
  std::string summary;
};

/// Execute one subcommand (forward, cgo, decay, phase, pair, recover,
/// selftest) against a config file. out_dir_flag selects the output
/// directory: when empty, the CGO_CALDERON_OUT environment variable is
/// consulted, and failing that a fresh runs/<subcommand>-<stamp> directory
/// is created under the working directory. An explicit directory that
/// already holds a summary.txt is refused rather than overwritten. threads
/// is accepted for config compatibility; execution is serial and results
/// never depend on it.
RunOutcome run_cli(const std::string& subcommand, const std::string& config_path,
                   const std::string& out_dir_flag, int threads);

}  // namespace calderon

#endif
