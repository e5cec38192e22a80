#include "affectfeed/error.hpp"

namespace affectfeed {

std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return "ParseError";
        case ErrorKind::DanglingReference: return "DanglingReference";
        case ErrorKind::DuplicateId: return "DuplicateId";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::InsufficientPositives: return "InsufficientPositives";
        case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorKind::NonFinitePrediction: return "NonFinitePrediction";
        case ErrorKind::DegenerateDataset: return "DegenerateDataset";
        case ErrorKind::UndefinedCorrelation: return "UndefinedCorrelation";
        case ErrorKind::NoOverlap: return "NoOverlap";
        case ErrorKind::Io: return "IoError";
    }
    return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

}  // namespace affectfeed
