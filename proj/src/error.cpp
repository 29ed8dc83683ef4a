#include "acmia/error.hpp"

namespace acmia {

std::string_view error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::FidelityMismatch: return "FidelityMismatch";
    case ErrorKind::InconsistentLogprob: return "InconsistentLogprob";
    case ErrorKind::EmptyTrace: return "EmptyTrace";
    case ErrorKind::MissingLogprob: return "MissingLogprob";
    case ErrorKind::NonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorKind::NonFiniteLogit: return "NonFiniteLogit";
    case ErrorKind::VocabularyTooSmall: return "VocabularyTooSmall";
    case ErrorKind::VocabularyTooLarge: return "VocabularyTooLarge";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::WrongFidelity: return "WrongFidelity";
    case ErrorKind::MissingGridPoint: return "MissingGridPoint";
    case ErrorKind::MissingText: return "MissingText";
    case ErrorKind::EmptyCompression: return "EmptyCompression";
    case ErrorKind::ZeroOriginalLoss: return "ZeroOriginalLoss";
    case ErrorKind::VocabMismatch: return "VocabMismatch";
    case ErrorKind::DegenerateSplit: return "DegenerateSplit";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::DegenerateScores: return "DegenerateScores";
    case ErrorKind::SplitOverlap: return "SplitOverlap";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::BadContextLength: return "BadContextLength";
    case ErrorKind::SequenceTooShort: return "SequenceTooShort";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace acmia
