#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pwb {

enum class Errc {
  EmptySpec,
  UnsortedSegments,
  MeanOutOfRange,
  RaggedRows,
  StartNotOne,
  InvalidHorizon,
  TimeOutOfRange,
  ArmOutOfRange,
  InvalidCount,
  InvalidDelta,
  InvalidAlpha,
  DegenerateLog,
  ValueOutOfRange,
  InvalidGap,
  InvalidEta,
  LastChangepoint,
  EtaTooSmall,
  GapTooSmall,
  NoObservations,
  ParseError,
  InconsistentTrace,
  InvalidConfig,
};

std::string_view to_string(Errc code) noexcept;

// All library failures are reported through this type; `code()` is the
// machine-checkable part, `what()` carries context for humans.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace pwb
