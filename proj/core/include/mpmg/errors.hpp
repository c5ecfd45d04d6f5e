#pragma once

#include <stdexcept>
#include <string>

namespace mpmg {

/// A value cast to binary16 during hierarchy construction fell outside the
/// representable range.
class HierarchyBuildError : public std::runtime_error {
 public:
  HierarchyBuildError(int level, const std::string& what)
      : std::runtime_error(what), level_(level) {}
  int level() const { return level_; }

 private:
  int level_;
};

/// The outer refinement loop produced a non-finite residual norm.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(int iteration, const std::string& what)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

/// A validation-mode check failed (non-finite entry or precision mismatch).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mpmg
