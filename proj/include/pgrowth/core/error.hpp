#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace pgrowth {

/// Error families double as process exit codes for the command-line front-end.
enum class ErrorFamily : int {
  config = 2,
  domain = 3,
  numerical = 4,
  solver = 5,
  geometry = 6,
  io = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorFamily family, std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), family_(family), kind_(std::move(kind)) {}

  [[nodiscard]] ErrorFamily family() const noexcept { return family_; }
  [[nodiscard]] const std::string& kind() const noexcept { return kind_; }
  [[nodiscard]] int exit_code() const noexcept { return static_cast<int>(family_); }

 private:
  ErrorFamily family_;
  std::string kind_;
};

#define PGROWTH_DEFINE_ERROR(Name, Family)                                  \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& message)                               \
        : Error(ErrorFamily::Family, #Name, message) {}                     \
  };

PGROWTH_DEFINE_ERROR(ConfigError, config)
PGROWTH_DEFINE_ERROR(UnsupportedLemma, config)
PGROWTH_DEFINE_ERROR(DomainError, domain)
PGROWTH_DEFINE_ERROR(UndefinedHessian, numerical)
PGROWTH_DEFINE_ERROR(IndefiniteTangent, numerical)
PGROWTH_DEFINE_ERROR(DegenerateInversion, numerical)
PGROWTH_DEFINE_ERROR(LinearSolveFailed, numerical)
PGROWTH_DEFINE_ERROR(LineSearchStalled, solver)
PGROWTH_DEFINE_ERROR(MaxIters, solver)
PGROWTH_DEFINE_ERROR(MinimalityViolated, solver)
PGROWTH_DEFINE_ERROR(BadDomain, geometry)
PGROWTH_DEFINE_ERROR(MeshMismatch, geometry)
PGROWTH_DEFINE_ERROR(BadStep, geometry)
PGROWTH_DEFINE_ERROR(BallTooSmall, geometry)
PGROWTH_DEFINE_ERROR(BallOutsideDomain, geometry)
PGROWTH_DEFINE_ERROR(IoError, io)

#undef PGROWTH_DEFINE_ERROR

/// Short scientific rendering for messages (std::to_string prints tiny values as 0.000000).
inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

}  // namespace pgrowth
