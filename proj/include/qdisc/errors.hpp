#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qdisc {

enum class ErrorKind {
  InvalidState,
  InvalidPriors,
  ShapeError,
  CompletenessViolation,
  NegativeFrequency,
  NonProjectorElement,
  DegenerateDenominator,
  SingularSystem,
  NoAdmissibleRoot,
  NoConvergence,
  SolverFailure,
  DenominatorVanishes,
  NonPositivePrior,
  CertificateFailed,
  DegenerateInput,
  ConfigMismatch,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-checkable kind and, where it applies, the
/// index of the offending element (0-based).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> index = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> index_;
};

}  // namespace qdisc
