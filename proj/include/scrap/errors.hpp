#pragma once

#include <stdexcept>
#include <string>

namespace scrap {

/// Failure categories. The CLI maps them onto process exit codes.
enum class ErrorKind {
    config,              // invalid parameters or grid
    solver,              // integration or shooting failure
    singular,            // Delta = Omega = 0 or a path through the origin
    not_applicable,      // operation preconditions do not hold
};

class ScrapError : public std::runtime_error {
public:
    ScrapError(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : ScrapError {
    explicit ConfigError(const std::string& what) : ScrapError(ErrorKind::config, what) {}
};

struct DegenerateWidthError : ScrapError {
    explicit DegenerateWidthError(const std::string& what) : ScrapError(ErrorKind::config, what) {}
};

/// Raised at the conical intersection Delta = Omega = 0.
struct ConicalIntersectionError : ScrapError {
    explicit ConicalIntersectionError(const std::string& what) : ScrapError(ErrorKind::singular, what) {}
};

struct StiffnessError : ScrapError {
    explicit StiffnessError(const std::string& what) : ScrapError(ErrorKind::solver, what) {}
};

struct ShootingFailure : ScrapError {
    explicit ShootingFailure(const std::string& what) : ScrapError(ErrorKind::solver, what) {}
};

struct RefinementNeededError : ScrapError {
    explicit RefinementNeededError(const std::string& what) : ScrapError(ErrorKind::singular, what) {}
};

struct NotApplicableError : ScrapError {
    explicit NotApplicableError(const std::string& what) : ScrapError(ErrorKind::not_applicable, what) {}
};

struct OutOfWindowError : ScrapError {
    explicit OutOfWindowError(const std::string& what) : ScrapError(ErrorKind::config, what) {}
};

} // namespace scrap
