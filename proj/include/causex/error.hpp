#pragma once

#include <stdexcept>
#include <string>

namespace causex {

enum class ErrorCode {
  Validation,          // malformed input, schema/domain violation
  Syntax,              // expression syntax error
  Evaluation,          // runtime expression failure (div by zero, unbound name)
  ConditioningOnNull,  // conditioning event has zero mass
  NotIdentifiable,     // no admissible adjustment / context violates backdoor
  Infeasible,          // recourse has no feasible plan
  Backend,             // black-box backend failure
  Convergence,         // numerical fit did not converge
  Limit,               // enumeration or size bound exceeded
  SchemaMismatch,      // request or input does not fit the loaded schema
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace causex
