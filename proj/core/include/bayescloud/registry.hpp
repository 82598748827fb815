#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bayescloud/inference.hpp"
#include "bayescloud/integration.hpp"

namespace bayescloud::registry {

struct ModelRecord {
    std::string id;
    std::string title;
    std::string description;
    std::string author;
    std::vector<std::string> keywords;
    std::string script;
    std::string created_at;  // UTC, ISO-8601 with milliseconds
    std::string updated_at;

    nlohmann::json to_json() const;
    /// Record without the script body.
    nlohmann::json summary_json() const;
    static ModelRecord from_json(const nlohmann::json& j);
    bool operator==(const ModelRecord&) const = default;
};

struct NewModel {
    std::string title;
    std::string description;
    std::string author;
    std::vector<std::string> keywords;
    std::string script;

    /// Reads {title, description, author, keywords, script}; throws InvalidRequest on wrong types.
    static NewModel from_json(const nlohmann::json& j);
};

/// Fields left empty are kept.
struct RecordUpdate {
    std::optional<std::string> title;
    std::optional<std::string> description;
    std::optional<std::string> author;
    std::optional<std::vector<std::string>> keywords;
    std::optional<std::string> script;

    static RecordUpdate from_json(const nlohmann::json& j);
};

struct MergeOutcome {
    std::string id;
    integration::MergeReport report;
};

/// File-backed model store: one JSON document per record under the data
/// directory, written by temp file and rename. Readers work on an immutable
/// snapshot; mutations are serialized.
class Registry {
public:
    /// Creates the directory if needed and loads every stored record. Throws IoError.
    explicit Registry(std::filesystem::path data_dir);

    /// Throws MissingTitle, InvalidScript.
    std::string register_model(const NewModel& model);
    /// Throws NotFound.
    ModelRecord get(const std::string& id) const;
    /// Throws NotFound, MissingTitle, InvalidScript; the stored record is untouched on failure.
    ModelRecord update(const std::string& id, const RecordUpdate& changes);
    /// Throws NotFound.
    void remove(const std::string& id);

    /// Case-insensitive token match over title, description and keywords,
    /// ranked by matched-token count, then most recently updated, then id.
    /// An empty query lists everything newest first.
    std::vector<ModelRecord> search(const std::string& query) const;

    std::size_t size() const;

    inference::Marginals infer(const std::string& id, const std::string& evidence_text,
                               const std::vector<std::string>& query) const;

    /// Registers the merge of two stored models as a new record.
    MergeOutcome merge(const std::string& id1, const std::string& id2, integration::MergeMethod method,
                       const integration::MergeOptions& options = {});

    const std::filesystem::path& data_dir() const noexcept { return dir_; }

private:
    using Snapshot = std::map<std::string, ModelRecord>;

    std::shared_ptr<const Snapshot> snapshot() const;
    void publish(std::shared_ptr<const Snapshot> next);
    void persist(const ModelRecord& record) const;

    std::filesystem::path dir_;
    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const Snapshot> snapshot_;
    std::mutex write_mutex_;
};

/// Lowercased alphanumeric tokens.
std::vector<std::string> tokenize(const std::string& text);

/// Current UTC time as "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string utc_now();

}  // namespace bayescloud::registry
