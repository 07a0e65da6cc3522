#pragma once

#include <stdexcept>
#include <string>

namespace fronttrack {

enum class ErrorKind {
  ModelInvalid,
  OutOfDomain,
  SolverDiverged,
  NumericalInconsistency,
  Precondition,
  SourceInvalid,
  NonTermination,
  ConfigError,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::ModelInvalid: return "ModelInvalid";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::SolverDiverged: return "SolverDiverged";
    case ErrorKind::NumericalInconsistency: return "NumericalInconsistency";
    case ErrorKind::Precondition: return "Precondition";
    case ErrorKind::SourceInvalid: return "SourceInvalid";
    case ErrorKind::NonTermination: return "NonTermination";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace fronttrack
