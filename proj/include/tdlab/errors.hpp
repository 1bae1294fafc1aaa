#pragma once

#include <stdexcept>
#include <string>

namespace tdlab {

/// Invalid input: bad grid, unsupported system, malformed configuration.
/// The CLI maps this to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical stage failed (solver stagnation, floor violation discovered
/// mid-pipeline, incompatible initial data). The CLI maps this to exit status 3.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string stage, const std::string& what)
      : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace tdlab
