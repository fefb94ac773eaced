#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sectree {

enum class ErrorKind {
    NoItemsFound,
    DuplicateItem,
    UnknownTokenizer,
    EmptyCorpus,
    ProviderUnavailable,
    DimensionMismatch,
    EmptyLexicon,
    IoError,
    InvalidBudget,
    InvalidConfig,
    InvalidInput,
    EmptyItem,
    EmptyTree,
    VersionMismatch,
    ChecksumMismatch,
    IndexMissing,
    FilingMismatch,
};

std::string_view to_string(ErrorKind kind);

// All library failures surface as this type; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace sectree
