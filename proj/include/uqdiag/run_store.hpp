#pragma once
// Persistence and ingestion: the canonical corpus format, run manifests, and
// the append-only JSONL stores for samples, distributions, diagnoses and
// intervention results. One writer per run directory (lock file); everything
// written here is deterministic under replay so run directories can be
// compared byte for byte.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"

namespace uqdiag {

enum class CorpusFormat {
    CanonicalJsonl,
};

// Canonical corpus: one JSON object per line with fields
//   {id, text, choices?, gold?, gold_aliases?, dataset?}
// choices is a list of {label, text}. Malformed lines raise ParseError with
// the line number; corpus-level invariant violations raise ValidationFailed.
std::vector<Question> ingest_corpus(const std::string& path,
                                    CorpusFormat format = CorpusFormat::CanonicalJsonl);

// --- record (de)serialization ---

nlohmann::json to_json(const Question& q);
nlohmann::json to_json(const AnswerSample& s);
nlohmann::json to_json(const AnswerDistribution& d);
nlohmann::json to_json(const DiagnosisOutcome& o);
nlohmann::json to_json(const InterventionResult& r);
nlohmann::json to_json(const ConfidenceRecord& r);

Question question_from_json(const nlohmann::json& j);
AnswerSample sample_from_json(const nlohmann::json& j);
AnswerDistribution distribution_from_json(const nlohmann::json& j);
DiagnosisOutcome diagnosis_from_json(const nlohmann::json& j);
InterventionResult intervention_from_json(const nlohmann::json& j);
ConfidenceRecord confidence_from_json(const nlohmann::json& j);

// --- run manifest ---

enum class Stage {
    Sample,
    Diagnose,
    Intervene,
    Report,
};

const char* to_string(Stage stage);

enum class StageState {
    Pending,
    Done,
    Failed,
};

const char* to_string(StageState state);

struct RunManifest {
    std::string run_id;
    std::string corpus_path;
    std::string corpus_hash;
    std::string created_at;
    nlohmann::json config;                       // immutable snapshot
    std::map<Stage, StageState> stages;          // all four, ordered
    std::map<std::string, StageState> studies;   // "clarify" / "inject"

    RunManifest();
    // First stage not yet done, or empty when everything completed.
    std::optional<Stage> next_pending() const;
};

// Handle to one run directory. Opening for write takes the lock file
// (LockHeld when another writer owns it); read-only access never locks.
class RunStore {
public:
    // Creates the directory if needed. `deterministic` pins timestamps so
    // replay runs are byte-identical.
    RunStore(std::string directory, bool writable, bool deterministic);
    ~RunStore();

    RunStore(const RunStore&) = delete;
    RunStore& operator=(const RunStore&) = delete;

    const std::string& directory() const { return dir_; }
    std::string path(const std::string& filename) const;

    bool has_manifest() const;
    RunManifest load_manifest() const;           // ManifestCorrupt on bad JSON
    void save_manifest(const RunManifest& m);

    // Loads the manifest and checks the requested config snapshot against the
    // stored one; a difference is ConfigMismatch. Returns the manifest.
    RunManifest resume(const nlohmann::json& requested_config) const;

    std::string timestamp() const;               // fixed in deterministic mode

    // JSONL stores. Appends flush per record; loads repair a half-written
    // trailing line (crash during append) by truncating it away.
    void append_record(const std::string& filename, const nlohmann::json& record);
    std::vector<nlohmann::json> load_records(const std::string& filename) const;

    std::vector<AnswerSample> load_samples() const;
    std::vector<AnswerDistribution> load_distributions() const;
    std::vector<DiagnosisOutcome> load_diagnoses() const;
    std::vector<InterventionResult> load_interventions() const;
    std::vector<ConfidenceRecord> load_confidences() const;

    static constexpr const char* kManifestFile = "manifest.json";
    static constexpr const char* kSamplesFile = "samples.jsonl";
    static constexpr const char* kDistributionsFile = "distributions.jsonl";
    static constexpr const char* kDiagnosesFile = "diagnoses.jsonl";
    static constexpr const char* kInterventionsFile = "interventions.jsonl";
    static constexpr const char* kConfidencesFile = "confidences.jsonl";
    static constexpr const char* kCacheFile = "cache.jsonl";
    static constexpr const char* kLockFile = ".lock";

private:
    std::string dir_;
    bool writable_;
    bool deterministic_;
    bool locked_ = false;
};

// Digest of a corpus file (FNV-1a over the raw bytes, hex).
std::string corpus_digest(const std::string& path);

} // namespace uqdiag
