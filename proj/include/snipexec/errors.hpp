#pragma once

#include <stdexcept>
#include <string>

namespace snipexec {

/// A documented precondition was not met by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The snippet could not be parsed for analysis.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InstrumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A generator response is not a strict `{imports, initialization}` object.
class ResponseParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The generator transport failed after all retries.
class GeneratorUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The execution backend itself failed (as opposed to the program it ran).
class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace snipexec
