#ifndef DVFSOPT_TESTS_CLI_RUNNER_HPP
#define DVFSOPT_TESTS_CLI_RUNNER_HPP

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef DVFSOPT_CLI_PATH
#error "DVFSOPT_CLI_PATH must name the built dvfsopt executable"
#endif

namespace cli {

/// Runs the CLI with `args` (already shell-quoted), stdout/stderr to `log`. Returns the exit status.
inline int run(const std::string& args, const std::filesystem::path& log)
{
    const std::string cmd = std::string("\"") + DVFSOPT_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string quote(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

} // namespace cli

#endif
