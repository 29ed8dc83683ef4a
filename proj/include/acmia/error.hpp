#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace acmia {

enum class ErrorKind {
  // trace-core
  FidelityMismatch,
  InconsistentLogprob,
  EmptyTrace,
  MissingLogprob,
  // tsp-math
  NonPositiveTemperature,
  NonFiniteLogit,
  VocabularyTooSmall,
  VocabularyTooLarge,
  IndexOutOfRange,
  // scores
  WrongFidelity,
  MissingGridPoint,
  MissingText,
  EmptyCompression,
  ZeroOriginalLoss,
  VocabMismatch,
  // calibrate / metrics
  DegenerateSplit,
  DegenerateLabels,
  DegenerateScores,
  SplitOverlap,
  // toy-lm
  InvalidConfig,
  EmptyCorpus,
  BadContextLength,
  SequenceTooShort,
  // plumbing
  InvalidArgument,
  Io,
  Parse,
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace acmia
