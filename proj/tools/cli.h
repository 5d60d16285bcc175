#ifndef HEADFILT_TOOLS_CLI_H_
#define HEADFILT_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace headfilt::cli {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Runs one command line (args excludes the program name). Results go to out,
// progress and diagnostics to err.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace headfilt::cli

#endif  // HEADFILT_TOOLS_CLI_H_
