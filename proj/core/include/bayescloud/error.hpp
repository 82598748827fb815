#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace bayescloud {

/// Machine-readable error families shared by the library, the CLI and the HTTP service.
enum class ErrorCode {
    // script language
    SyntaxError,
    DuplicateNode,
    DuplicateState,
    UnknownStateReference,
    MissingStateProbability,
    ProbabilityOutOfRange,
    InvalidVariance,
    ParentMismatch,
    KindMismatch,
    DuplicateAssignment,
    // network compilation / evaluation
    CycleError,
    DegenerateDomain,
    IncompleteTable,
    RowNotNormalized,
    UnknownParentState,
    UnknownVariable,
    UnknownState,
    InvalidParent,
    IncompleteAssignment,
    // inference
    ZeroProbabilityEvidence,
    NonLeafContinuousEvidence,
    UnsupportedNetwork,
    // integration
    DomainMismatch,
    SharedVariablesPresent,
    NoSharedVariables,
    ContinuousVariablesPresent,
    StateSpaceTooLarge,
    CycleInUnion,
    NotConverged,
    // learning / data
    EmptyDataset,
    TooFewColumns,
    DataError,
    // corpus
    InvalidParams,
    UnknownRegion,
    // registry
    NotFound,
    InvalidScript,
    MissingTitle,
    InvalidRequest,
    IoError,
};

std::string_view to_token(ErrorCode code) noexcept;

/// True for failures of the computation itself (non-convergence, impossible
/// evidence, refused merges) as opposed to malformed input.
bool is_computation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, nlohmann::json details = nlohmann::json::object())
        : std::runtime_error(message), code_(code), details_(std::move(details)) {}

    ErrorCode code() const noexcept { return code_; }
    std::string_view token() const noexcept { return to_token(code_); }
    const nlohmann::json& details() const noexcept { return details_; }

    /// {code, message, details}
    nlohmann::json to_json() const;

private:
    ErrorCode code_;
    nlohmann::json details_;
};

/// Positioned diagnostic raised by the script and evidence parsers.
class ScriptError : public Error {
public:
    ScriptError(ErrorCode code, std::size_t line, std::size_t column, const std::string& message,
                std::string expected = {});

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& expected() const noexcept { return expected_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string expected_;
};

}  // namespace bayescloud
