#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "thermoseer/config.hpp"
#include "thermoseer/errors.hpp"

namespace thermoseer::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kConfigError = 2,
    kDataError = 3,
    kCheckpointError = 4,
    kProtocolError = 5,
    kHorizonError = 6,
};

int exit_code(ErrorKind kind) noexcept;

int cmd_generate(const Config& config, std::ostream& out);
int cmd_train(const Config& config, std::ostream& out);
int cmd_finetune(const Config& config, std::ostream& out);
int cmd_predict(const Config& config, std::ostream& out);
int cmd_eval(const Config& config, std::ostream& out);
int cmd_field(const Config& config, std::ostream& out);
int cmd_benchmark(const Config& config, std::ostream& out);

/// Parses argv, merges the optional --config file with command-line flags
/// (flags win) and dispatches. Errors are printed to err; returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace thermoseer::cli
