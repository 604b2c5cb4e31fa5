#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tascov {

enum class ErrorCode {
    NotPositiveDefinite = 1,
    DomainError,
    ConvergenceFailure,
    DimensionMismatch,
    EmptyInput,
    DegenerateInput,
    InconsistentTable,
    DegenerateDenominator,
    InsufficientSamples,
    ParseError,
    IoError,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Non-fatal conditions collected during a run and surfaced in reports.
class Warnings {
public:
    void add(std::string message) { messages_.push_back(std::move(message)); }
    void append(const Warnings& other) {
        messages_.insert(messages_.end(), other.messages_.begin(), other.messages_.end());
    }
    const std::vector<std::string>& messages() const noexcept { return messages_; }
    bool empty() const noexcept { return messages_.empty(); }

private:
    std::vector<std::string> messages_;
};

}  // namespace tascov
