#pragma once

#include <stdexcept>
#include <string>

namespace qpe {

/// Invalid configuration or parameters; maps to CLI exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A per-order extraction subroutine could not produce estimates. The
/// adaptive loop treats this as that round's failure mode, not a crash.
struct SubroutineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Every bin cleared the threshold, so there is no gap to anchor pruning.
struct NoGapError : SubroutineError {
  NoGapError() : SubroutineError("conservative extraction: all bins above threshold") {}
};

/// All-zero signal handed to the pencil solver.
struct DegenerateSignalError : SubroutineError {
  DegenerateSignalError() : SubroutineError("matrix pencil: signal is identically zero") {}
};

/// The forbidden region covers the whole multiplier search range.
struct NoAdmissibleMultiplierError : std::runtime_error {
  NoAdmissibleMultiplierError()
      : std::runtime_error("no admissible multiplier in search range") {}
};

/// Not enough populated bins to fit; maps to CLI exit code 3.
struct InsufficientDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qpe
