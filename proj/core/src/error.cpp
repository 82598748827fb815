#include "bayescloud/error.hpp"

namespace bayescloud {

std::string_view to_token(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::SyntaxError: return "syntax_error";
    case ErrorCode::DuplicateNode: return "duplicate_node";
    case ErrorCode::DuplicateState: return "duplicate_state";
    case ErrorCode::UnknownStateReference: return "unknown_state_reference";
    case ErrorCode::MissingStateProbability: return "missing_state_probability";
    case ErrorCode::ProbabilityOutOfRange: return "probability_out_of_range";
    case ErrorCode::InvalidVariance: return "invalid_variance";
    case ErrorCode::ParentMismatch: return "parent_mismatch";
    case ErrorCode::KindMismatch: return "kind_mismatch";
    case ErrorCode::DuplicateAssignment: return "duplicate_assignment";
    case ErrorCode::CycleError: return "cycle_error";
    case ErrorCode::DegenerateDomain: return "degenerate_domain";
    case ErrorCode::IncompleteTable: return "incomplete_table";
    case ErrorCode::RowNotNormalized: return "row_not_normalized";
    case ErrorCode::UnknownParentState: return "unknown_parent_state";
    case ErrorCode::UnknownVariable: return "unknown_variable";
    case ErrorCode::UnknownState: return "unknown_state";
    case ErrorCode::InvalidParent: return "invalid_parent";
    case ErrorCode::IncompleteAssignment: return "incomplete_assignment";
    case ErrorCode::ZeroProbabilityEvidence: return "zero_probability_evidence";
    case ErrorCode::NonLeafContinuousEvidence: return "non_leaf_continuous_evidence";
    case ErrorCode::UnsupportedNetwork: return "unsupported_network";
    case ErrorCode::DomainMismatch: return "domain_mismatch";
    case ErrorCode::SharedVariablesPresent: return "shared_variables_present";
    case ErrorCode::NoSharedVariables: return "no_shared_variables";
    case ErrorCode::ContinuousVariablesPresent: return "continuous_variables_present";
    case ErrorCode::StateSpaceTooLarge: return "state_space_too_large";
    case ErrorCode::CycleInUnion: return "cycle_in_union";
    case ErrorCode::NotConverged: return "not_converged";
    case ErrorCode::EmptyDataset: return "empty_dataset";
    case ErrorCode::TooFewColumns: return "too_few_columns";
    case ErrorCode::DataError: return "data_error";
    case ErrorCode::InvalidParams: return "invalid_params";
    case ErrorCode::UnknownRegion: return "unknown_region";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::InvalidScript: return "invalid_script";
    case ErrorCode::MissingTitle: return "missing_title";
    case ErrorCode::InvalidRequest: return "invalid_request";
    case ErrorCode::IoError: return "io_error";
    }
    return "unknown";
}

bool is_computation_error(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::ZeroProbabilityEvidence:
    case ErrorCode::NotConverged:
    case ErrorCode::CycleInUnion:
    case ErrorCode::StateSpaceTooLarge:
        return true;
    default:
        return false;
    }
}

nlohmann::json Error::to_json() const {
    return {{"code", std::string(token())}, {"message", what()}, {"details", details_}};
}

ScriptError::ScriptError(ErrorCode code, std::size_t line, std::size_t column, const std::string& message,
                         std::string expected)
    : Error(code, std::to_string(line) + ":" + std::to_string(column) + ": " + message,
            {{"line", line}, {"column", column}, {"expected", expected}}),
      line_(line), column_(column), expected_(std::move(expected)) {}

}  // namespace bayescloud
