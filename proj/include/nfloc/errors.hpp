#pragma once

#include <stdexcept>
#include <string>

namespace nfloc {

// Bad user input: malformed config, inconsistent grouping, incompatible model file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Base for failures of the numerical pipeline (exit code 3 at the CLI).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularFim : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegeneratePair : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class AllPairsDegenerate : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class Divergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace nfloc
