#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace affectfeed {

enum class ErrorKind {
    Parse,
    DanglingReference,
    DuplicateId,
    InvalidArgument,
    InsufficientPositives,
    NonFiniteLoss,
    NonFinitePrediction,
    DegenerateDataset,
    UndefinedCorrelation,
    NoOverlap,
    Io,
};

std::string_view error_kind_name(ErrorKind kind);

// Every failure surfaced by the library carries a kind so callers (and the
// CLI) can report it by name.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }
    std::string_view kind_name() const { return error_kind_name(kind_); }

private:
    ErrorKind kind_;
};

}  // namespace affectfeed
