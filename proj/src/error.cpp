#include "sectree/error.hpp"

namespace sectree {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NoItemsFound: return "NoItemsFound";
    case ErrorKind::DuplicateItem: return "DuplicateItem";
    case ErrorKind::UnknownTokenizer: return "UnknownTokenizer";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyLexicon: return "EmptyLexicon";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidBudget: return "InvalidBudget";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::EmptyItem: return "EmptyItem";
    case ErrorKind::EmptyTree: return "EmptyTree";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::IndexMissing: return "IndexMissing";
    case ErrorKind::FilingMismatch: return "FilingMismatch";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

} // namespace sectree
