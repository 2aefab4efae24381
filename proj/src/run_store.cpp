#include "uqdiag/run_store.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>

#include "uqdiag/errors.hpp"
#include "uqdiag/util.hpp"

namespace fs = std::filesystem;

namespace uqdiag {

std::vector<Question> ingest_corpus(const std::string& path, CorpusFormat format) {
    (void)format;   // CanonicalJsonl is the only format
    std::string content = util::read_file(path);
    std::vector<Question> questions;
    int line_no = 0;
    std::size_t start = 0;
    while (start < content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string::npos) end = content.size();
        ++line_no;
        std::string_view line(content.data() + start, end - start);
        start = end + 1;
        if (util::trim(line).empty()) continue;

        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_no) + ": invalid JSON record");
        }
        try {
            Question q;
            q.id = j.at("id").get<std::string>();
            q.text = j.at("text").get<std::string>();
            if (j.contains("choices")) {
                for (const auto& c : j["choices"]) {
                    q.choices.push_back(
                        {c.at("label").get<std::string>(), c.at("text").get<std::string>()});
                }
            }
            if (j.contains("gold") && !j["gold"].is_null()) {
                q.gold_answer = j["gold"].get<std::string>();
            }
            if (j.contains("gold_aliases")) {
                q.gold_aliases = j["gold_aliases"].get<std::vector<std::string>>();
            }
            q.dataset_tag = j.value("dataset", "");
            questions.push_back(std::move(q));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_no) + ": " + e.what());
        }
    }

    auto issues = validate_corpus(questions);
    if (!issues.empty()) {
        std::string detail;
        for (const auto& issue : issues) {
            detail += "\n  " + std::string(to_string(issue.rule)) + " [" + issue.question_id +
                      "]: " + issue.detail;
        }
        throw Error(ErrorCode::ValidationFailed,
                    "corpus has " + std::to_string(issues.size()) + " issue(s):" + detail);
    }
    return questions;
}

// --- serialization ---

nlohmann::json to_json(const Question& q) {
    nlohmann::json j{{"id", q.id}, {"text", q.text}, {"dataset", q.dataset_tag}};
    if (!q.choices.empty()) {
        nlohmann::json choices = nlohmann::json::array();
        for (const auto& c : q.choices) {
            choices.push_back({{"label", c.label}, {"text", c.text}});
        }
        j["choices"] = std::move(choices);
    }
    if (q.gold_answer) j["gold"] = *q.gold_answer;
    if (!q.gold_aliases.empty()) j["gold_aliases"] = q.gold_aliases;
    if (!q.revision.empty()) j["revision"] = q.revision;
    return j;
}

Question question_from_json(const nlohmann::json& j) {
    Question q;
    q.id = j.at("id").get<std::string>();
    q.text = j.at("text").get<std::string>();
    if (j.contains("choices")) {
        for (const auto& c : j["choices"]) {
            q.choices.push_back(
                {c.at("label").get<std::string>(), c.at("text").get<std::string>()});
        }
    }
    if (j.contains("gold") && !j["gold"].is_null()) q.gold_answer = j["gold"].get<std::string>();
    if (j.contains("gold_aliases")) {
        q.gold_aliases = j["gold_aliases"].get<std::vector<std::string>>();
    }
    q.dataset_tag = j.value("dataset", "");
    q.revision = j.value("revision", "");
    return q;
}

nlohmann::json to_json(const AnswerSample& s) {
    return nlohmann::json{{"question_id", s.question_id},
                          {"sample_index", s.sample_index},
                          {"raw_text", s.raw_text},
                          {"extracted_answer", s.extracted_answer},
                          {"provider_meta", s.provider_meta}};
}

AnswerSample sample_from_json(const nlohmann::json& j) {
    AnswerSample s;
    s.question_id = j.at("question_id").get<std::string>();
    s.sample_index = j.at("sample_index").get<int>();
    s.raw_text = j.at("raw_text").get<std::string>();
    s.extracted_answer = j.at("extracted_answer").get<std::string>();
    if (j.contains("provider_meta")) s.provider_meta = j["provider_meta"];
    return s;
}

nlohmann::json to_json(const AnswerDistribution& d) {
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& c : d.clusters) {
        clusters.push_back(
            {{"answer", c.answer}, {"count", c.count}, {"probability", c.probability}});
    }
    return nlohmann::json{{"question_id", d.question_id},
                          {"clusters", std::move(clusters)},
                          {"n_samples", d.n_samples},
                          {"entropy", d.entropy},
                          {"majority_answer", d.majority_answer},
                          {"majority_confidence", d.majority_confidence}};
}

AnswerDistribution distribution_from_json(const nlohmann::json& j) {
    AnswerDistribution d;
    d.question_id = j.at("question_id").get<std::string>();
    for (const auto& c : j.at("clusters")) {
        d.clusters.push_back({c.at("answer").get<std::string>(), c.at("count").get<int>(),
                              c.at("probability").get<double>()});
    }
    d.n_samples = j.at("n_samples").get<int>();
    d.entropy = j.at("entropy").get<double>();
    d.majority_answer = j.at("majority_answer").get<std::string>();
    d.majority_confidence = j.at("majority_confidence").get<double>();
    return d;
}

nlohmann::json to_json(const DiagnosisOutcome& o) {
    nlohmann::json j{{"question_id", o.question_id}};
    if (o.record) {
        j["status"] = "ok";
        j["label"] = to_string(o.record->label);
        j["rationale"] = o.record->rationale;
        j["auxiliary_model"] = o.record->auxiliary_model;
        if (o.record->knowledge_gap) j["knowledge_gap"] = *o.record->knowledge_gap;
    } else {
        j["status"] = "error";
        j["error"] = o.error;
    }
    return j;
}

DiagnosisOutcome diagnosis_from_json(const nlohmann::json& j) {
    DiagnosisOutcome o;
    o.question_id = j.at("question_id").get<std::string>();
    if (j.value("status", "ok") == "ok") {
        DiagnosisRecord record;
        record.question_id = o.question_id;
        auto label = diagnosis_label_from_string(j.at("label").get<std::string>());
        if (!label) {
            throw Error(ErrorCode::ParseError,
                        "unknown diagnosis label '" + j["label"].get<std::string>() + "'");
        }
        record.label = *label;
        record.rationale = j.value("rationale", "");
        record.auxiliary_model = j.value("auxiliary_model", "");
        if (j.contains("knowledge_gap")) {
            record.knowledge_gap = j["knowledge_gap"].get<std::string>();
        }
        o.record = std::move(record);
    } else {
        o.error = j.value("error", "unknown error");
    }
    return o;
}

nlohmann::json to_json(const InterventionResult& r) {
    nlohmann::json j{{"question_id", r.question_id},
                     {"kind", to_string(r.kind)},
                     {"modified_context", r.modified_context},
                     {"unc_before", r.unc_before},
                     {"unc_after", r.unc_after},
                     {"unc_reduction_rate", r.unc_reduction_rate}};
    if (r.acc_before) j["acc_before"] = *r.acc_before;
    if (r.acc_after) j["acc_after"] = *r.acc_after;
    if (r.acc_improvement_rate) j["acc_improvement_rate"] = *r.acc_improvement_rate;
    if (r.label) j["label"] = to_string(*r.label);
    return j;
}

InterventionResult intervention_from_json(const nlohmann::json& j) {
    InterventionResult r;
    r.question_id = j.at("question_id").get<std::string>();
    auto kind = intervention_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) {
        throw Error(ErrorCode::ParseError,
                    "unknown intervention kind '" + j["kind"].get<std::string>() + "'");
    }
    r.kind = *kind;
    r.modified_context = j.value("modified_context", "");
    r.unc_before = j.at("unc_before").get<double>();
    r.unc_after = j.at("unc_after").get<double>();
    r.unc_reduction_rate = j.at("unc_reduction_rate").get<double>();
    if (j.contains("acc_before")) r.acc_before = j["acc_before"].get<double>();
    if (j.contains("acc_after")) r.acc_after = j["acc_after"].get<double>();
    if (j.contains("acc_improvement_rate")) {
        r.acc_improvement_rate = j["acc_improvement_rate"].get<double>();
    }
    if (j.contains("label")) {
        r.label = diagnosis_label_from_string(j["label"].get<std::string>());
    }
    return r;
}

nlohmann::json to_json(const ConfidenceRecord& r) {
    return nlohmann::json{{"question_id", r.question_id},
                          {"method", to_string(r.method)},
                          {"confidence", r.confidence},
                          {"correct", r.correct}};
}

ConfidenceRecord confidence_from_json(const nlohmann::json& j) {
    ConfidenceRecord r;
    r.question_id = j.at("question_id").get<std::string>();
    auto method = confidence_method_from_string(j.at("method").get<std::string>());
    if (!method) {
        throw Error(ErrorCode::ParseError,
                    "unknown confidence method '" + j["method"].get<std::string>() + "'");
    }
    r.method = *method;
    r.confidence = j.at("confidence").get<double>();
    r.correct = j.at("correct").get<bool>();
    return r;
}

// --- manifest ---

const char* to_string(Stage stage) {
    switch (stage) {
        case Stage::Sample: return "sample";
        case Stage::Diagnose: return "diagnose";
        case Stage::Intervene: return "intervene";
        case Stage::Report: return "report";
    }
    return "?";
}

const char* to_string(StageState state) {
    switch (state) {
        case StageState::Pending: return "pending";
        case StageState::Done: return "done";
        case StageState::Failed: return "failed";
    }
    return "?";
}

namespace {

StageState stage_state_from_string(const std::string& s) {
    if (s == "done") return StageState::Done;
    if (s == "failed") return StageState::Failed;
    return StageState::Pending;
}

constexpr Stage kStageOrder[] = {Stage::Sample, Stage::Diagnose, Stage::Intervene,
                                 Stage::Report};

} // namespace

RunManifest::RunManifest() {
    for (Stage s : kStageOrder) stages[s] = StageState::Pending;
    studies["clarify"] = StageState::Pending;
    studies["inject"] = StageState::Pending;
}

std::optional<Stage> RunManifest::next_pending() const {
    for (Stage s : kStageOrder) {
        auto it = stages.find(s);
        if (it == stages.end() || it->second != StageState::Done) return s;
    }
    return std::nullopt;
}

// --- run store ---

RunStore::RunStore(std::string directory, bool writable, bool deterministic)
    : dir_(std::move(directory)), writable_(writable), deterministic_(deterministic) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create run directory " + dir_);
    if (writable_) {
        // single writer per run directory
        std::string lock = path(kLockFile);
        std::ifstream existing(lock);
        if (existing.good()) {
            throw Error(ErrorCode::LockHeld, "run directory is locked: " + dir_);
        }
        std::ofstream out(lock);
        if (!out) throw Error(ErrorCode::IoError, "cannot create lock file in " + dir_);
        out << "locked\n";
        locked_ = true;
    }
}

RunStore::~RunStore() {
    if (locked_) {
        std::error_code ec;
        fs::remove(path(kLockFile), ec);
    }
}

std::string RunStore::path(const std::string& filename) const {
    return (fs::path(dir_) / filename).string();
}

bool RunStore::has_manifest() const { return util::file_exists(path(kManifestFile)); }

RunManifest RunStore::load_manifest() const {
    nlohmann::json j = nlohmann::json::parse(util::read_file(path(kManifestFile)), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorCode::ManifestCorrupt, "manifest is not valid JSON in " + dir_);
    }
    try {
        RunManifest m;
        m.run_id = j.at("run_id").get<std::string>();
        m.corpus_path = j.value("corpus_path", "");
        m.corpus_hash = j.value("corpus_hash", "");
        m.created_at = j.value("created_at", "");
        m.config = j.at("config");
        for (Stage s : kStageOrder) {
            m.stages[s] =
                stage_state_from_string(j.at("stages").value(to_string(s), "pending"));
        }
        if (j.contains("studies")) {
            for (auto it = j["studies"].begin(); it != j["studies"].end(); ++it) {
                m.studies[it.key()] = stage_state_from_string(it.value().get<std::string>());
            }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ManifestCorrupt, std::string("manifest field missing: ") + e.what());
    }
}

void RunStore::save_manifest(const RunManifest& m) {
    if (!writable_) throw Error(ErrorCode::IoError, "run store opened read-only");
    nlohmann::json stages;
    for (const auto& [stage, state] : m.stages) stages[to_string(stage)] = to_string(state);
    nlohmann::json studies;
    for (const auto& [name, state] : m.studies) studies[name] = to_string(state);
    nlohmann::json j{{"run_id", m.run_id},
                     {"corpus_path", m.corpus_path},
                     {"corpus_hash", m.corpus_hash},
                     {"created_at", m.created_at},
                     {"config", m.config},
                     {"stages", std::move(stages)},
                     {"studies", std::move(studies)}};
    util::write_file(path(kManifestFile), j.dump(2) + "\n");
}

RunManifest RunStore::resume(const nlohmann::json& requested_config) const {
    RunManifest m = load_manifest();
    if (m.config != requested_config) {
        nlohmann::json diff = nlohmann::json::diff(m.config, requested_config);
        throw Error(ErrorCode::ConfigMismatch,
                    "stored run config differs from the requested one: " + diff.dump());
    }
    return m;
}

std::string RunStore::timestamp() const {
    if (deterministic_) return "1970-01-01T00:00:00Z";
    return util::iso8601_utc(static_cast<std::int64_t>(::time(nullptr)));
}

void RunStore::append_record(const std::string& filename, const nlohmann::json& record) {
    if (!writable_) throw Error(ErrorCode::IoError, "run store opened read-only");
    util::append_jsonl(path(filename), record);
}

std::vector<nlohmann::json> RunStore::load_records(const std::string& filename) const {
    return util::read_jsonl_repair(path(filename));
}

std::vector<AnswerSample> RunStore::load_samples() const {
    std::vector<AnswerSample> out;
    for (const auto& j : load_records(kSamplesFile)) out.push_back(sample_from_json(j));
    return out;
}

std::vector<AnswerDistribution> RunStore::load_distributions() const {
    std::vector<AnswerDistribution> out;
    for (const auto& j : load_records(kDistributionsFile)) {
        out.push_back(distribution_from_json(j));
    }
    return out;
}

std::vector<DiagnosisOutcome> RunStore::load_diagnoses() const {
    std::vector<DiagnosisOutcome> out;
    for (const auto& j : load_records(kDiagnosesFile)) out.push_back(diagnosis_from_json(j));
    return out;
}

std::vector<InterventionResult> RunStore::load_interventions() const {
    std::vector<InterventionResult> out;
    for (const auto& j : load_records(kInterventionsFile)) {
        out.push_back(intervention_from_json(j));
    }
    return out;
}

std::vector<ConfidenceRecord> RunStore::load_confidences() const {
    std::vector<ConfidenceRecord> out;
    for (const auto& j : load_records(kConfidencesFile)) out.push_back(confidence_from_json(j));
    return out;
}

std::string corpus_digest(const std::string& path) {
    return util::fnv1a64_hex(util::read_file(path));
}

} // namespace uqdiag
