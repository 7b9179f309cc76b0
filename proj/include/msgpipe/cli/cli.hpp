// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace msgpipe::cli {

enum ExitCode { kOk = 0, kFailed = 1, kUsage = 2, kEnvironment = 3 };

/// Runs the command line. Errors go to `err` as `error[E###]: message`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Long flags accepted by each subcommand; the key "" holds the global flags.
std::map<std::string, std::vector<std::string>> accepted_flags();

} // namespace msgpipe::cli
