#include "bayescloud/registry.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "bayescloud/error.hpp"
#include "bayescloud/json_io.hpp"
#include "bayescloud/network.hpp"

namespace bayescloud::registry {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string format_time(std::chrono::system_clock::time_point tp) {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(tp.time_since_epoch()).count();
    const std::time_t secs = static_cast<std::time_t>(ms / 1000);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms % 1000));
    return buf;
}

std::optional<std::chrono::system_clock::time_point> parse_time(const std::string& text) {
    std::tm tm{};
    int ms = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ", &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
                    &tm.tm_min, &tm.tm_sec, &ms) != 7) {
        return std::nullopt;
    }
    tm.tm_year -= 1900;
    tm.tm_mon -= 1;
    return std::chrono::system_clock::from_time_t(timegm(&tm)) + std::chrono::milliseconds(ms);
}

/// A timestamp strictly later than `previous`.
std::string later_than(const std::string& previous) {
    auto now = std::chrono::system_clock::now();
    if (auto prev = parse_time(previous); prev && now <= *prev + std::chrono::milliseconds(1)) {
        now = *prev + std::chrono::milliseconds(1);
    }
    auto text = format_time(now);
    return text > previous ? text : format_time(*parse_time(previous) + std::chrono::milliseconds(1));
}

std::string new_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

bool valid_id(const std::string& id) {
    return !id.empty() && id.size() <= 64 &&
           std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isalnum(c) || c == '-' || c == '_'; });
}

void check_title(const std::string& title) {
    if (std::all_of(title.begin(), title.end(), [](unsigned char c) { return std::isspace(c); })) {
        throw Error(ErrorCode::MissingTitle, "a model needs a non-empty title");
    }
}

/// Compiles and validates; wraps every failure as InvalidScript.
BayesianNetwork check_script(const std::string& script) {
    BayesianNetwork net;
    try {
        net = compile_script(script);
    } catch (const ScriptError& e) {
        throw Error(ErrorCode::InvalidScript, e.what(),
                    {{"code", std::string(e.token())},
                     {"message", e.what()},
                     {"line", e.line()},
                     {"column", e.column()},
                     {"details", e.details()}});
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidScript, e.what(),
                    {{"code", std::string(e.token())}, {"message", e.what()}, {"details", e.details()}});
    }
    const auto report = validate(net);
    if (!report.ok()) {
        throw Error(ErrorCode::InvalidScript, "script fails validation: " + report.findings.front().message,
                    {{"code", "validation"}, {"findings", report_to_json(report)["findings"]}});
    }
    return net;
}

template <typename T>
T field(const json& j, const char* name, T fallback) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::InvalidRequest, std::string("field '") + name + "' has the wrong type", {{"field", name}});
    }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* name) {
    if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
    return field<T>(j, name, T{});
}

}  // namespace

std::string utc_now() { return format_time(std::chrono::system_clock::now()); }

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

json ModelRecord::to_json() const {
    auto j = summary_json();
    j["script"] = script;
    return j;
}

json ModelRecord::summary_json() const {
    return {{"id", id},
            {"title", title},
            {"description", description},
            {"author", author},
            {"keywords", keywords},
            {"created_at", created_at},
            {"updated_at", updated_at}};
}

ModelRecord ModelRecord::from_json(const json& j) {
    ModelRecord r;
    try {
        r.id = j.at("id").get<std::string>();
        r.title = j.at("title").get<std::string>();
        r.description = j.value("description", "");
        r.author = j.value("author", "");
        r.keywords = j.value("keywords", std::vector<std::string>{});
        r.script = j.at("script").get<std::string>();
        r.created_at = j.at("created_at").get<std::string>();
        r.updated_at = j.at("updated_at").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::IoError, std::string("malformed record: ") + e.what());
    }
    return r;
}

NewModel NewModel::from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidRequest, "request body must be a JSON object");
    NewModel m;
    m.title = field<std::string>(j, "title", "");
    m.description = field<std::string>(j, "description", "");
    m.author = field<std::string>(j, "author", "");
    m.keywords = field<std::vector<std::string>>(j, "keywords", {});
    m.script = field<std::string>(j, "script", "");
    return m;
}

RecordUpdate RecordUpdate::from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidRequest, "request body must be a JSON object");
    RecordUpdate u;
    u.title = optional_field<std::string>(j, "title");
    u.description = optional_field<std::string>(j, "description");
    u.author = optional_field<std::string>(j, "author");
    u.keywords = optional_field<std::vector<std::string>>(j, "keywords");
    u.script = optional_field<std::string>(j, "script");
    return u;
}

Registry::Registry(fs::path data_dir) : dir_(std::move(data_dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create data directory '" + dir_.string() + "': " + ec.message());
    auto snap = std::make_shared<Snapshot>();
    for (const auto& entry : fs::directory_iterator(dir_, ec)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw Error(ErrorCode::IoError, "cannot read '" + entry.path().string() + "': " + e.what());
        }
        auto record = ModelRecord::from_json(j);
        snap->emplace(record.id, std::move(record));
    }
    if (ec) throw Error(ErrorCode::IoError, "cannot list '" + dir_.string() + "': " + ec.message());
    snapshot_ = std::move(snap);
}

std::shared_ptr<const Registry::Snapshot> Registry::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

void Registry::publish(std::shared_ptr<const Snapshot> next) {
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(next);
}

void Registry::persist(const ModelRecord& record) const {
    const auto final_path = dir_ / (record.id + ".json");
    const auto tmp_path = dir_ / (record.id + ".json.tmp");
    {
        std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
        out << record.to_json().dump(2) << '\n';
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "cannot write '" + tmp_path.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp_path, final_path, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot replace '" + final_path.string() + "': " + ec.message());
}

std::string Registry::register_model(const NewModel& model) {
    check_title(model.title);
    check_script(model.script);
    std::lock_guard lock(write_mutex_);
    auto current = snapshot();
    ModelRecord r{new_id(), model.title, model.description, model.author, model.keywords, model.script, utc_now(), {}};
    while (current->count(r.id)) r.id = new_id();
    r.updated_at = r.created_at;
    persist(r);
    auto next = std::make_shared<Snapshot>(*current);
    next->emplace(r.id, r);
    publish(std::move(next));
    return r.id;
}

ModelRecord Registry::get(const std::string& id) const {
    auto snap = snapshot();
    auto it = snap->find(id);
    if (it == snap->end()) throw Error(ErrorCode::NotFound, "no model with id '" + id + "'", {{"id", id}});
    return it->second;
}

ModelRecord Registry::update(const std::string& id, const RecordUpdate& changes) {
    std::lock_guard lock(write_mutex_);
    auto current = snapshot();
    auto it = current->find(id);
    if (it == current->end()) throw Error(ErrorCode::NotFound, "no model with id '" + id + "'", {{"id", id}});
    ModelRecord r = it->second;
    if (changes.title) r.title = *changes.title;
    if (changes.description) r.description = *changes.description;
    if (changes.author) r.author = *changes.author;
    if (changes.keywords) r.keywords = *changes.keywords;
    if (changes.script) r.script = *changes.script;
    check_title(r.title);
    if (changes.script) check_script(r.script);
    r.updated_at = later_than(it->second.updated_at);
    persist(r);
    auto next = std::make_shared<Snapshot>(*current);
    (*next)[id] = r;
    publish(std::move(next));
    return r;
}

void Registry::remove(const std::string& id) {
    std::lock_guard lock(write_mutex_);
    auto current = snapshot();
    if (!current->count(id)) throw Error(ErrorCode::NotFound, "no model with id '" + id + "'", {{"id", id}});
    std::error_code ec;
    if (valid_id(id)) fs::remove(dir_ / (id + ".json"), ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot delete record '" + id + "': " + ec.message());
    auto next = std::make_shared<Snapshot>(*current);
    next->erase(id);
    publish(std::move(next));
}

std::vector<ModelRecord> Registry::search(const std::string& query) const {
    auto snap = snapshot();
    const auto tokens = tokenize(query);
    const std::set<std::string> wanted(tokens.begin(), tokens.end());
    std::vector<std::pair<std::size_t, const ModelRecord*>> hits;
    for (const auto& [id, r] : *snap) {
        if (wanted.empty()) {
            hits.emplace_back(0, &r);
            continue;
        }
        std::set<std::string> have;
        for (auto& t : tokenize(r.title)) have.insert(std::move(t));
        for (auto& t : tokenize(r.description)) have.insert(std::move(t));
        for (const auto& k : r.keywords) {
            for (auto& t : tokenize(k)) have.insert(std::move(t));
        }
        std::size_t matched = 0;
        for (const auto& t : wanted) matched += have.count(t);
        if (matched > 0) hits.emplace_back(matched, &r);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        if (a.second->updated_at != b.second->updated_at) return a.second->updated_at > b.second->updated_at;
        return a.second->id < b.second->id;
    });
    std::vector<ModelRecord> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back(*h.second);
    return out;
}

std::size_t Registry::size() const { return snapshot()->size(); }

inference::Marginals Registry::infer(const std::string& id, const std::string& evidence_text,
                                     const std::vector<std::string>& query) const {
    const auto record = get(id);
    const auto net = compile_script(record.script);
    const auto evidence = script::parse_evidence(evidence_text);
    return inference::infer(net, evidence, query);
}

MergeOutcome Registry::merge(const std::string& id1, const std::string& id2, integration::MergeMethod method,
                             const integration::MergeOptions& options) {
    const auto r1 = get(id1);
    const auto r2 = get(id2);
    const auto merged = integration::merge(compile_script(r1.script), compile_script(r2.script), method, options);
    NewModel m;
    m.title = "Merge of " + r1.title + " and " + r2.title;
    m.description = "Merged with method " + std::string(integration::to_string(merged.report.method)) + " from " + id1 +
                    " and " + id2;
    m.author = r1.author == r2.author ? r1.author : r1.author + ", " + r2.author;
    for (const auto* src : {&r1.keywords, &r2.keywords}) {
        for (const auto& k : *src) {
            if (std::find(m.keywords.begin(), m.keywords.end(), k) == m.keywords.end()) m.keywords.push_back(k);
        }
    }
    m.script = to_script(merged.network);
    return {register_model(m), merged.report};
}

}  // namespace bayescloud::registry
