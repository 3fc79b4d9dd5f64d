#ifndef DVFSOPT_ERROR_HPP
#define DVFSOPT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace dvfsopt {

/// Process exit codes, one per error class. The CLI maps uncaught errors onto these.
enum class ExitCode : int {
    ok = 0,
    usage = 2,
    parse = 3,
    configuration = 4,
    invalid_argument = 5,
    domain = 6,
    infeasible = 7,
    underdetermined_fit = 8,
    dimension = 9,
    io = 10,
    internal = 70,
};

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    [[nodiscard]] virtual auto exit_code() const noexcept -> ExitCode { return ExitCode::internal; }
};

#define DVFSOPT_DEFINE_ERROR(Name, Code)                                                         \
    class Name : public Error {                                                                  \
      public:                                                                                    \
        explicit Name(const std::string& what) : Error(what) {}                                  \
        [[nodiscard]] auto exit_code() const noexcept -> ExitCode override { return Code; }      \
    };

// Value outside the mathematical domain of an operation (negative utilization, T <= 0, ...).
DVFSOPT_DEFINE_ERROR(DomainError, ExitCode::domain)
// Argument inconsistent with another argument (mode not in spec, bad allocation).
DVFSOPT_DEFINE_ERROR(InvalidArgument, ExitCode::invalid_argument)
DVFSOPT_DEFINE_ERROR(ParseError, ExitCode::parse)
DVFSOPT_DEFINE_ERROR(ConfigError, ExitCode::configuration)
DVFSOPT_DEFINE_ERROR(InfeasibleError, ExitCode::infeasible)
DVFSOPT_DEFINE_ERROR(UnderdeterminedFit, ExitCode::underdetermined_fit)
DVFSOPT_DEFINE_ERROR(EmptySample, ExitCode::domain)
DVFSOPT_DEFINE_ERROR(IncompleteEvaluation, ExitCode::invalid_argument)
DVFSOPT_DEFINE_ERROR(DimensionError, ExitCode::dimension)
DVFSOPT_DEFINE_ERROR(IoError, ExitCode::io)

#undef DVFSOPT_DEFINE_ERROR

} // namespace dvfsopt

#endif
