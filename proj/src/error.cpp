#include "kcurate/error.hpp"

namespace kcurate {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "missing file";
    case ErrorCode::MissingDataset: return "missing dataset";
    case ErrorCode::WrongRank: return "wrong rank";
    case ErrorCode::NonFinite: return "non-finite value";
    case ErrorCode::ShapeMismatch: return "shape mismatch";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::DuplicateKey: return "duplicate key";
    case ErrorCode::DanglingReference: return "dangling reference";
    case ErrorCode::FormatError: return "format error";
    case ErrorCode::LengthError: return "length error";
    case ErrorCode::ModelMismatch: return "model mismatch";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::UndefinedRatio: return "undefined ratio";
    case ErrorCode::ImageTooSmall: return "image too small";
    case ErrorCode::DegenerateMask: return "degenerate mask";
    case ErrorCode::EmptyInput: return "empty input";
    case ErrorCode::KTooLarge: return "k too large";
    case ErrorCode::MissingArtifact: return "missing artifact";
    case ErrorCode::ConfigError: return "config error";
    case ErrorCode::NumericFailure: return "numeric failure";
    case ErrorCode::IoError: return "i/o error";
  }
  return "error";
}

}  // namespace kcurate
