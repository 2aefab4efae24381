#pragma once
// Stage drivers behind the CLI subcommands. The CLI binary only parses flags;
// everything it does goes through these functions so tests can drive the full
// pipeline in-process.

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "calibration.hpp"
#include "diagnosis.hpp"
#include "gateway.hpp"
#include "intervention.hpp"
#include "run_store.hpp"
#include "sampling.hpp"

namespace uqdiag {

enum class BackendMode {
    Live,
    Replay,
    Scripted,
};

const char* to_string(BackendMode mode);
std::optional<BackendMode> backend_mode_from_string(const std::string& name);

// Full pipeline configuration; the manifest stores its JSON form (minus run
// and corpus paths) as the immutable config snapshot.
struct CliConfig {
    std::string run_id = "run";
    std::string run_dir;
    std::string corpus_path;
    BackendMode backend = BackendMode::Scripted;
    std::string fixture_path;          // required for scripted mode
    std::string cache_path;            // default: <run_dir>/cache.jsonl
    bool use_cache = true;

    std::string base_url = "https://api.openai.com/v1";
    std::string search_endpoint;
    std::string target_model = "gpt-4o-mini";
    std::string auxiliary_model = "o1-mini";

    int n_samples = 10;
    double tau = 0.89;
    int n_bins = 10;
    double temperature = 1.0;
    int max_tokens = 1024;
    ExtractionMode extraction_mode = ExtractionMode::MultipleChoiceLetter;
    Normalization normalization;
    KnowledgeSource knowledge_source = KnowledgeSource::WebSearch;
    bool fall_back_to_synthesis = true;
    int concurrency = 1;

    // Optional template override files.
    std::string attribution_template_path;
    std::string extraction_template_path;
    std::string synthesis_template_path;
    std::string clarification_template_path;

    nlohmann::json snapshot() const;   // everything that shapes results
    static CliConfig from_json(const nlohmann::json& j);   // inverse of snapshot
    void apply_json(const nlohmann::json& j);              // partial overrides

    SamplingConfig sampling_config() const;
    DiagnosisConfig diagnosis_config() const;
    InterventionConfig intervention_config() const;
};

// Backends materialized for one stage invocation.
struct BackendSet {
    std::shared_ptr<Backend> raw;        // scripted/http/replay
    std::shared_ptr<Backend> effective;  // raw, possibly wrapped in the cache
    std::shared_ptr<SearchProvider> search;

    std::uint64_t provider_calls() const { return raw ? raw->call_count() : 0; }
};

BackendSet make_backends(const CliConfig& config);

struct QuantifySummary {
    int n_questions = 0;
    int n_flagged = 0;
    int n_skipped = 0;          // already sampled (resume)
    double mean_uncertainty = 0.0;
    std::uint64_t provider_calls = 0;
};

// Samples every question, writes samples/distributions/confidences, marks the
// Sample stage done. Resumes: questions that already have N stored samples
// are not re-sampled.
QuantifySummary cmd_quantify(const CliConfig& config, std::ostream& out);

struct DiagnoseSummary {
    int n_diagnosed = 0;
    int n_failed = 0;
    std::map<DiagnosisLabel, int> histogram;
    std::uint64_t provider_calls = 0;
};

DiagnoseSummary cmd_diagnose(const CliConfig& config, std::ostream& out);

enum class StudyKind {
    Clarify,
    Inject,
};

const char* to_string(StudyKind kind);

struct ValidateSummary {
    StudyKind study = StudyKind::Clarify;
    int n_questions = 0;
    bool no_eligible = false;
    std::string csv_path;
    std::uint64_t provider_calls = 0;
};

ValidateSummary cmd_validate(const CliConfig& config, StudyKind study, std::ostream& out);

struct CalibrateSummary {
    std::vector<CalibrationReport> reports;
    std::vector<std::string> method_errors;   // "method: message"
};

// Records come from a CSV file (records_path) or, when empty, from the run's
// stored self-consistency confidences.
CalibrateSummary cmd_calibrate(const CliConfig& config, const std::string& records_path,
                               std::ostream& out);

struct ReportSummary {
    std::string report_path;
};

// Bundles everything present in the run directory into report.md.
ReportSummary cmd_report(const CliConfig& config, std::ostream& out);

// Convenience driver used by tests: quantify, diagnose, both studies, report.
void run_full_pipeline(const CliConfig& config, std::ostream& out);

} // namespace uqdiag
