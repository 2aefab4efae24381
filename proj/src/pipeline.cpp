#include "uqdiag/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <future>
#include <map>
#include <ostream>
#include <set>

#include "uqdiag/calibration.hpp"
#include "uqdiag/errors.hpp"
#include "uqdiag/report.hpp"
#include "uqdiag/util.hpp"

namespace uqdiag {

const char* to_string(BackendMode mode) {
    switch (mode) {
        case BackendMode::Live: return "live";
        case BackendMode::Replay: return "replay";
        case BackendMode::Scripted: return "scripted";
    }
    return "?";
}

std::optional<BackendMode> backend_mode_from_string(const std::string& name) {
    std::string n = util::to_lower(name);
    if (n == "live") return BackendMode::Live;
    if (n == "replay") return BackendMode::Replay;
    if (n == "scripted") return BackendMode::Scripted;
    return std::nullopt;
}

const char* to_string(StudyKind kind) {
    switch (kind) {
        case StudyKind::Clarify: return "clarify";
        case StudyKind::Inject: return "inject";
    }
    return "?";
}

// The snapshot carries everything that shapes results. Operational knobs that
// cannot change outputs (run/cache locations, concurrency, cache on/off) stay
// out so a resume is not rejected over them.
nlohmann::json CliConfig::snapshot() const {
    return nlohmann::json{
        {"backend", to_string(backend)},
        {"fixture_path", fixture_path},
        {"base_url", base_url},
        {"search_endpoint", search_endpoint},
        {"target_model", target_model},
        {"auxiliary_model", auxiliary_model},
        {"n_samples", n_samples},
        {"tau", tau},
        {"n_bins", n_bins},
        {"temperature", temperature},
        {"max_tokens", max_tokens},
        {"extraction_mode", to_string(extraction_mode)},
        {"normalization",
         {{"lowercase", normalization.lowercase},
          {"strip_punctuation", normalization.strip_punctuation},
          {"strip_articles", normalization.strip_articles}}},
        {"knowledge_source", to_string(knowledge_source)},
        {"fall_back_to_synthesis", fall_back_to_synthesis},
        {"attribution_template_path", attribution_template_path},
        {"extraction_template_path", extraction_template_path},
        {"synthesis_template_path", synthesis_template_path},
        {"clarification_template_path", clarification_template_path},
    };
}

void CliConfig::apply_json(const nlohmann::json& j) {
    auto set_string = [&j](const char* key, std::string& field) {
        if (j.contains(key)) field = j.at(key).get<std::string>();
    };
    if (j.contains("backend")) {
        auto mode = backend_mode_from_string(j["backend"].get<std::string>());
        if (!mode) throw Error(ErrorCode::InvalidConfig, "unknown backend mode");
        backend = *mode;
    }
    set_string("run_id", run_id);
    set_string("run_dir", run_dir);
    set_string("corpus_path", corpus_path);
    set_string("fixture_path", fixture_path);
    set_string("cache_path", cache_path);
    set_string("base_url", base_url);
    set_string("search_endpoint", search_endpoint);
    set_string("target_model", target_model);
    set_string("auxiliary_model", auxiliary_model);
    if (j.contains("use_cache")) use_cache = j["use_cache"].get<bool>();
    if (j.contains("n_samples")) n_samples = j["n_samples"].get<int>();
    if (j.contains("tau")) tau = j["tau"].get<double>();
    if (j.contains("n_bins")) n_bins = j["n_bins"].get<int>();
    if (j.contains("temperature")) temperature = j["temperature"].get<double>();
    if (j.contains("max_tokens")) max_tokens = j["max_tokens"].get<int>();
    if (j.contains("extraction_mode")) {
        auto mode = extraction_mode_from_string(j["extraction_mode"].get<std::string>());
        if (!mode) throw Error(ErrorCode::InvalidConfig, "unknown extraction mode");
        extraction_mode = *mode;
    }
    if (j.contains("normalization")) {
        const auto& n = j["normalization"];
        if (n.contains("lowercase")) normalization.lowercase = n["lowercase"].get<bool>();
        if (n.contains("strip_punctuation")) {
            normalization.strip_punctuation = n["strip_punctuation"].get<bool>();
        }
        if (n.contains("strip_articles")) {
            normalization.strip_articles = n["strip_articles"].get<bool>();
        }
    }
    if (j.contains("knowledge_source")) {
        auto source = knowledge_source_from_string(j["knowledge_source"].get<std::string>());
        if (!source) throw Error(ErrorCode::InvalidConfig, "unknown knowledge source");
        knowledge_source = *source;
    }
    if (j.contains("fall_back_to_synthesis")) {
        fall_back_to_synthesis = j["fall_back_to_synthesis"].get<bool>();
    }
    if (j.contains("concurrency")) concurrency = j["concurrency"].get<int>();
    set_string("attribution_template_path", attribution_template_path);
    set_string("extraction_template_path", extraction_template_path);
    set_string("synthesis_template_path", synthesis_template_path);
    set_string("clarification_template_path", clarification_template_path);
}

CliConfig CliConfig::from_json(const nlohmann::json& j) {
    CliConfig config;
    config.apply_json(j);
    return config;
}

SamplingConfig CliConfig::sampling_config() const {
    SamplingConfig s;
    s.n_samples = n_samples;
    s.extraction_mode = extraction_mode;
    s.normalization = normalization;
    s.model = target_model;
    s.temperature = temperature;
    s.max_tokens = max_tokens;
    return s;
}

DiagnosisConfig CliConfig::diagnosis_config() const {
    DiagnosisConfig d;
    d.tau = tau;
    d.auxiliary_model = auxiliary_model;
    d.max_tokens = max_tokens;
    if (!attribution_template_path.empty()) {
        d.attribution_prompt_template = util::read_file(attribution_template_path);
    }
    if (!extraction_template_path.empty()) {
        d.extraction_prompt_template = util::read_file(extraction_template_path);
    }
    d.validate();
    return d;
}

InterventionConfig CliConfig::intervention_config() const {
    InterventionConfig i;
    i.knowledge_source = knowledge_source;
    i.fall_back_to_synthesis = fall_back_to_synthesis;
    i.auxiliary_model = auxiliary_model;
    i.max_tokens = max_tokens;
    if (!synthesis_template_path.empty()) {
        i.synthesis_prompt_template = util::read_file(synthesis_template_path);
    }
    if (!clarification_template_path.empty()) {
        i.clarification_prompt_template = util::read_file(clarification_template_path);
    }
    i.validate();
    return i;
}

namespace {

std::string resolved_cache_path(const CliConfig& config) {
    if (!config.cache_path.empty()) return config.cache_path;
    if (config.run_dir.empty()) {
        throw Error(ErrorCode::InvalidConfig, "no run directory configured");
    }
    return config.run_dir + "/cache.jsonl";
}

bool is_deterministic(const CliConfig& config) {
    return config.backend != BackendMode::Live;
}

} // namespace

BackendSet make_backends(const CliConfig& config) {
    BackendSet set;
    switch (config.backend) {
        case BackendMode::Scripted: {
            if (config.fixture_path.empty()) {
                throw Error(ErrorCode::InvalidConfig,
                            "scripted backend requires a fixture path");
            }
            Fixture fixture = load_fixture_file(config.fixture_path);
            set.raw = fixture.backend;
            set.search = fixture.search;
            break;
        }
        case BackendMode::Replay: {
            set.raw = std::make_shared<ReplayBackend>(resolved_cache_path(config));
            if (!config.fixture_path.empty()) {
                set.search = load_fixture_file(config.fixture_path).search;
            } else {
                set.search = std::make_shared<NullSearchProvider>();
            }
            break;
        }
        case BackendMode::Live: {
            const char* key = std::getenv("UQDIAG_API_KEY");
            if (!key || !*key) {
                throw Error(ErrorCode::AuthError,
                            "live backend requires UQDIAG_API_KEY in the environment");
            }
            HttpBackendConfig http;
            http.base_url = config.base_url;
            http.api_key = key;
            http.max_in_flight = std::max(1, config.concurrency * 2);
            set.raw = std::make_shared<HttpBackend>(std::move(http));
            if (!config.search_endpoint.empty()) {
                set.search = std::make_shared<HttpSearchProvider>(config.search_endpoint, key);
            } else {
                set.search = std::make_shared<NullSearchProvider>();
            }
            break;
        }
    }
    if (config.use_cache && config.backend != BackendMode::Replay) {
        set.effective = std::make_shared<CachingBackend>(set.raw, resolved_cache_path(config),
                                                         is_deterministic(config));
    } else {
        set.effective = set.raw;
    }
    return set;
}

namespace {

// Loads the manifest, verifying the stored config snapshot and corpus digest;
// creates it on the first stage of a fresh run.
RunManifest open_manifest(RunStore& store, const CliConfig& config, bool allow_create) {
    nlohmann::json snapshot = config.snapshot();
    if (store.has_manifest()) {
        RunManifest manifest = store.resume(snapshot);
        if (!config.corpus_path.empty() && !manifest.corpus_path.empty()) {
            if (corpus_digest(config.corpus_path) != manifest.corpus_hash) {
                throw Error(ErrorCode::ConfigMismatch,
                            "corpus content changed since the run was created");
            }
        }
        return manifest;
    }
    if (!allow_create) {
        throw Error(ErrorCode::StageOrderError,
                    "run has no manifest; run quantify first");
    }
    RunManifest manifest;
    manifest.run_id = config.run_id;
    manifest.corpus_path = config.corpus_path;
    manifest.corpus_hash =
        config.corpus_path.empty() ? "" : corpus_digest(config.corpus_path);
    manifest.created_at = store.timestamp();
    manifest.config = snapshot;
    store.save_manifest(manifest);
    return manifest;
}

void require_stage_done(const RunManifest& manifest, Stage stage, const char* hint) {
    auto it = manifest.stages.find(stage);
    if (it == manifest.stages.end() || it->second != StageState::Done) {
        throw Error(ErrorCode::StageOrderError,
                    std::string("stage '") + to_string(stage) + "' not completed; " + hint);
    }
}

std::map<std::string, std::vector<AnswerSample>> group_samples(
    const std::vector<AnswerSample>& samples) {
    std::map<std::string, std::vector<AnswerSample>> grouped;
    for (const auto& s : samples) grouped[s.question_id].push_back(s);
    for (auto& [id, list] : grouped) {
        std::stable_sort(list.begin(), list.end(),
                         [](const AnswerSample& a, const AnswerSample& b) {
                             return a.sample_index < b.sample_index;
                         });
    }
    return grouped;
}

} // namespace

QuantifySummary cmd_quantify(const CliConfig& config, std::ostream& out) {
    if (config.corpus_path.empty()) {
        throw Error(ErrorCode::InvalidConfig, "quantify needs a corpus path");
    }
    std::vector<Question> corpus = ingest_corpus(config.corpus_path);
    if (corpus.empty()) {
        throw Error(ErrorCode::EmptyCorpus, "corpus has no questions: " + config.corpus_path);
    }

    RunStore store(config.run_dir, /*writable=*/true, is_deterministic(config));
    RunManifest manifest = open_manifest(store, config, /*allow_create=*/true);
    BackendSet backends = make_backends(config);
    SamplingConfig sampling = config.sampling_config();

    auto stored_samples = group_samples(store.load_samples());
    std::map<std::string, AnswerDistribution> done_dists;
    for (auto& d : store.load_distributions()) done_dists[d.question_id] = std::move(d);

    QuantifySummary summary;
    summary.n_questions = static_cast<int>(corpus.size());
    double entropy_sum = 0.0;

    struct Work {
        std::vector<AnswerSample> fresh;   // newly generated, to append
        std::vector<AnswerSample> all;     // full N for the distribution
    };

    auto process_question = [&](const Question& question) -> Work {
        Work work;
        std::map<int, AnswerSample> by_index;
        auto it = stored_samples.find(question.id);
        if (it != stored_samples.end()) {
            for (const auto& s : it->second) by_index[s.sample_index] = s;
        }
        const std::string prompt_stage = "sample";
        for (int i = 0; i < sampling.n_samples; ++i) {
            auto found = by_index.find(i);
            if (found != by_index.end()) {
                work.all.push_back(found->second);
                continue;
            }
            // generate just this missing index
            GenerationRequest request;
            request.model = sampling.model;
            request.messages = {{"user", render_question_prompt(question)}};
            request.temperature = sampling.temperature;
            request.max_tokens = sampling.max_tokens;
            request.request_tag = question.id + "#" + prompt_stage + "#" + std::to_string(i);
            GenerationResponse response = backends.effective->generate(request);
            AnswerSample sample;
            sample.question_id = question.id;
            sample.sample_index = i;
            sample.raw_text = response.text;
            sample.extracted_answer = extract_final_answer(
                response.text, sampling.extraction_mode, question, sampling.normalization);
            sample.provider_meta = nlohmann::json{
                {"model", sampling.model},
                {"prompt_tokens", response.usage.prompt_tokens},
                {"completion_tokens", response.usage.completion_tokens},
            };
            work.fresh.push_back(sample);
            work.all.push_back(std::move(sample));
        }
        return work;
    };

    auto finish_question = [&](const Question& question, Work work) {
        for (const auto& s : work.fresh) {
            store.append_record(RunStore::kSamplesFile, to_json(s));
        }
        AnswerDistribution dist = build_distribution(work.all);
        store.append_record(RunStore::kDistributionsFile, to_json(dist));
        if (auto correct = majority_correct(dist, question, sampling.normalization)) {
            ConfidenceRecord record;
            record.question_id = question.id;
            record.method = ConfidenceMethod::SelfConsistency;
            record.confidence = self_consistency_confidence(dist);
            record.correct = *correct > 0.5;
            store.append_record(RunStore::kConfidencesFile, to_json(record));
        }
        entropy_sum += dist.entropy;
        if (dist.entropy > config.tau) ++summary.n_flagged;
    };

    // Questions that already have a stored distribution are done from an
    // earlier (interrupted) invocation; their entropy still counts.
    std::vector<const Question*> todo;
    for (const auto& question : corpus) {
        if (done_dists.count(question.id)) {
            const auto& dist = done_dists[question.id];
            entropy_sum += dist.entropy;
            if (dist.entropy > config.tau) ++summary.n_flagged;
            ++summary.n_skipped;
        } else {
            todo.push_back(&question);
        }
    }

    int concurrency = std::max(1, config.concurrency);
    for (std::size_t i = 0; i < todo.size(); i += static_cast<std::size_t>(concurrency)) {
        std::size_t chunk_end =
            std::min(todo.size(), i + static_cast<std::size_t>(concurrency));
        if (concurrency == 1) {
            finish_question(*todo[i], process_question(*todo[i]));
            continue;
        }
        std::vector<std::future<Work>> futures;
        for (std::size_t k = i; k < chunk_end; ++k) {
            futures.push_back(std::async(std::launch::async,
                                         [&, k] { return process_question(*todo[k]); }));
        }
        for (std::size_t k = i; k < chunk_end; ++k) {
            finish_question(*todo[k], futures[k - i].get());
        }
    }

    summary.mean_uncertainty = entropy_sum / static_cast<double>(corpus.size());
    summary.provider_calls = backends.provider_calls();

    manifest.stages[Stage::Sample] = StageState::Done;
    store.save_manifest(manifest);

    out << "quantify: " << summary.n_questions << " questions, flagged " << summary.n_flagged
        << "/" << summary.n_questions << " (tau "
        << util::format_fixed(config.tau, kUncertaintyDecimals) << "), mean uncertainty "
        << util::format_fixed(summary.mean_uncertainty, kUncertaintyDecimals) << "\n";
    if (summary.n_skipped > 0) {
        out << "quantify: reused stored results for " << summary.n_skipped << " question(s)\n";
    }
    return summary;
}

namespace {

// Corpus-aligned views used by diagnose and the studies.
struct LoadedRun {
    std::vector<Question> corpus;
    std::vector<AnswerDistribution> dists;                 // corpus order
    std::vector<std::vector<AnswerSample>> samples;        // corpus order
};

LoadedRun load_run_inputs(const RunStore& store, const RunManifest& manifest,
                          const CliConfig& config) {
    LoadedRun run;
    std::string corpus_path =
        !config.corpus_path.empty() ? config.corpus_path : manifest.corpus_path;
    if (corpus_path.empty()) {
        throw Error(ErrorCode::InvalidConfig, "run has no corpus path");
    }
    run.corpus = ingest_corpus(corpus_path);

    auto dists = store.load_distributions();
    std::map<std::string, AnswerDistribution> by_id;
    for (auto& d : dists) by_id[d.question_id] = std::move(d);
    auto grouped = group_samples(store.load_samples());

    for (const auto& question : run.corpus) {
        auto it = by_id.find(question.id);
        if (it == by_id.end()) {
            throw Error(ErrorCode::Precondition,
                        "no stored distribution for '" + question.id + "'");
        }
        run.dists.push_back(it->second);
        run.samples.push_back(grouped[question.id]);
    }
    return run;
}

} // namespace

DiagnoseSummary cmd_diagnose(const CliConfig& config, std::ostream& out) {
    RunStore store(config.run_dir, /*writable=*/true, is_deterministic(config));
    RunManifest manifest = open_manifest(store, config, /*allow_create=*/false);
    require_stage_done(manifest, Stage::Sample, "run quantify first");

    LoadedRun run = load_run_inputs(store, manifest, config);

    // resume granularity: question ids already diagnosed are kept as-is
    std::set<std::string> already;
    std::vector<DiagnosisOutcome> existing = store.load_diagnoses();
    for (const auto& o : existing) already.insert(o.question_id);

    DiagnoseSummary summary;
    if (manifest.stages[Stage::Diagnose] != StageState::Done) {
        std::vector<Question> questions;
        std::vector<AnswerDistribution> dists;
        std::vector<std::vector<AnswerSample>> samples;
        for (std::size_t i = 0; i < run.corpus.size(); ++i) {
            if (already.count(run.corpus[i].id)) continue;
            questions.push_back(run.corpus[i]);
            dists.push_back(run.dists[i]);
            samples.push_back(run.samples[i]);
        }
        BackendSet backends = make_backends(config);
        DiagnosisConfig diagnosis = config.diagnosis_config();
        auto outcomes = diagnose_corpus(questions, dists, samples, diagnosis,
                                        *backends.effective);
        for (const auto& outcome : outcomes) {
            store.append_record(RunStore::kDiagnosesFile, to_json(outcome));
            existing.push_back(outcome);
        }
        summary.provider_calls = backends.provider_calls();
        manifest.stages[Stage::Diagnose] = StageState::Done;
        store.save_manifest(manifest);
    }

    for (const auto& outcome : existing) {
        if (outcome.ok()) {
            ++summary.n_diagnosed;
            ++summary.histogram[outcome.record->label];
        } else {
            ++summary.n_failed;
        }
    }

    out << "diagnose: " << summary.n_diagnosed << " diagnosed, " << summary.n_failed
        << " failed\n";
    for (const auto& [label, count] : summary.histogram) {
        out << "  " << to_string(label) << ": " << count << "\n";
    }
    return summary;
}

ValidateSummary cmd_validate(const CliConfig& config, StudyKind study, std::ostream& out) {
    RunStore store(config.run_dir, /*writable=*/true, is_deterministic(config));
    RunManifest manifest = open_manifest(store, config, /*allow_create=*/false);
    require_stage_done(manifest, Stage::Sample, "run quantify first");
    require_stage_done(manifest, Stage::Diagnose, "run diagnose first");

    ValidateSummary summary;
    summary.study = study;
    const std::string study_name = to_string(study);
    const InterventionKind kind = study == StudyKind::Clarify
                                      ? InterventionKind::Clarification
                                      : InterventionKind::KnowledgeInjection;

    LoadedRun run = load_run_inputs(store, manifest, config);
    std::vector<DiagnosisOutcome> diagnoses = store.load_diagnoses();

    // per-question results already stored for this study (interrupted run)
    std::set<std::string> already;
    std::vector<InterventionResult> stored;
    for (auto& r : store.load_interventions()) {
        if (r.kind == kind) {
            already.insert(r.question_id);
            stored.push_back(std::move(r));
        }
    }

    int skipped_failed = 0;
    for (const auto& o : diagnoses) {
        if (!o.ok()) ++skipped_failed;
    }

    StudyReport report;
    if (manifest.studies[study_name] == StageState::Done) {
        report = aggregate_study(kind, std::move(stored), skipped_failed);
    } else {
        std::vector<DiagnosisOutcome> todo;
        for (const auto& o : diagnoses) {
            if (!already.count(o.question_id)) todo.push_back(o);
        }
        BackendSet backends = make_backends(config);
        SamplingConfig sampling = config.sampling_config();
        InterventionConfig intervention = config.intervention_config();

        StudyReport fresh;
        if (study == StudyKind::Clarify) {
            fresh = run_clarification_study(run.corpus, run.dists, todo, sampling,
                                            intervention, *backends.effective);
        } else {
            fresh = run_injection_study(run.corpus, run.dists, todo, sampling, intervention,
                                        *backends.effective, *backends.search);
        }
        summary.provider_calls = backends.provider_calls();

        for (const auto& r : fresh.per_question) {
            store.append_record(RunStore::kInterventionsFile, to_json(r));
        }
        std::vector<InterventionResult> merged = std::move(stored);
        for (auto& r : fresh.per_question) merged.push_back(std::move(r));
        report = aggregate_study(kind, std::move(merged), skipped_failed);

        manifest.studies[study_name] = StageState::Done;
        manifest.stages[Stage::Intervene] = StageState::Done;
        store.save_manifest(manifest);
    }

    summary.n_questions = static_cast<int>(report.per_question.size());
    summary.no_eligible = report.per_question.empty();

    const std::string dataset =
        run.corpus.empty() ? "" : run.corpus.front().dataset_tag;
    util::Csv csv = study == StudyKind::Clarify
                        ? clarify_table(report, dataset, config.target_model)
                        : inject_table(report, dataset, config.target_model);
    summary.csv_path =
        store.path(study == StudyKind::Clarify ? "clarify_table.csv" : "inject_table.csv");
    util::write_csv(summary.csv_path, csv);

    out << study_name << " study: " << summary.n_questions << " question(s)";
    if (report.skipped_failed_diagnoses > 0) {
        out << ", " << report.skipped_failed_diagnoses << " excluded (failed diagnosis)";
    }
    out << "\n";
    if (summary.no_eligible) {
        out << "notice: no eligible questions for the " << study_name << " study\n";
    } else {
        out << render_console_table(csv);
    }
    return summary;
}

CalibrateSummary cmd_calibrate(const CliConfig& config, const std::string& records_path,
                               std::ostream& out) {
    std::vector<ConfidenceRecord> records;
    if (!records_path.empty()) {
        records = confidence_records_from_csv(util::read_csv(records_path));
    } else {
        RunStore store(config.run_dir, /*writable=*/false, is_deterministic(config));
        records = store.load_confidences();
    }
    if (records.empty()) {
        throw Error(ErrorCode::EmptyRecords, "no confidence records to calibrate");
    }

    std::map<ConfidenceMethod, std::vector<ConfidenceRecord>> per_method;
    for (auto& r : records) per_method[r.method].push_back(std::move(r));

    CalibrateSummary summary;
    for (const auto& [method, method_records] : per_method) {
        try {
            auto reports = method_comparison({{method, method_records}}, config.n_bins);
            summary.reports.insert(summary.reports.end(), reports.begin(), reports.end());
        } catch (const Error& e) {
            summary.method_errors.push_back(e.what());
        }
    }

    util::Csv csv = calibration_table(summary.reports);
    if (!config.run_dir.empty()) {
        RunStore store(config.run_dir, /*writable=*/true, is_deterministic(config));
        util::write_csv(store.path("calibration.csv"), csv);
    }

    // console view mirrors a side-by-side comparison: when at least two
    // methods are present, absent canonical methods show a dash row
    util::Csv console = csv;
    if (per_method.size() >= 2) {
        for (ConfidenceMethod method : {ConfidenceMethod::Verbalization,
                                        ConfidenceMethod::Perplexity,
                                        ConfidenceMethod::SelfConsistency}) {
            if (!per_method.count(method)) {
                console.rows.push_back({to_string(method), "-", "-", "-", "-", "-"});
            }
        }
    }
    out << render_console_table(console);
    for (const auto& err : summary.method_errors) {
        out << "note: " << err << "\n";
    }
    return summary;
}

ReportSummary cmd_report(const CliConfig& config, std::ostream& out) {
    RunStore store(config.run_dir, /*writable=*/true, is_deterministic(config));
    RunManifest manifest = open_manifest(store, config, /*allow_create=*/false);
    require_stage_done(manifest, Stage::Sample, "run quantify first");

    auto dists = store.load_distributions();
    double entropy_sum = 0.0;
    int flagged = 0;
    for (const auto& d : dists) {
        entropy_sum += d.entropy;
        if (d.entropy > config.tau) ++flagged;
    }

    std::string md;
    md += "# Run report: " + manifest.run_id + "\n\n";
    md += "- corpus: " + manifest.corpus_path + " (" + std::to_string(dists.size()) +
          " questions, digest " + manifest.corpus_hash + ")\n";
    md += "- created: " + manifest.created_at + "\n";
    md += "- backend: " + std::string(to_string(config.backend)) + "\n";
    md += "- target model: " + config.target_model + ", auxiliary model: " +
          config.auxiliary_model + "\n";
    md += "- n_samples: " + std::to_string(config.n_samples) + ", tau: " +
          util::format_fixed(config.tau, kUncertaintyDecimals) + "\n\n";

    md += "## Uncertainty\n\n";
    md += "- mean uncertainty: " +
          util::format_fixed(dists.empty() ? 0.0 : entropy_sum / dists.size(),
                             kUncertaintyDecimals) +
          " nats\n";
    md += "- flagged: " + std::to_string(flagged) + "/" + std::to_string(dists.size()) + "\n\n";

    auto diagnoses = store.load_diagnoses();
    if (!diagnoses.empty()) {
        std::map<DiagnosisLabel, int> histogram;
        int failed = 0;
        for (const auto& o : diagnoses) {
            if (o.ok()) ++histogram[o.record->label];
            else ++failed;
        }
        md += "## Diagnosis\n\n| label | count |\n| --- | --- |\n";
        for (const auto& [label, count] : histogram) {
            md += "| " + std::string(to_string(label)) + " | " + std::to_string(count) + " |\n";
        }
        if (failed > 0) md += "| (failed) | " + std::to_string(failed) + " |\n";
        md += "\n";
    }

    const std::pair<const char*, const char*> tables[] = {
        {"clarify_table.csv", "Clarification study"},
        {"inject_table.csv", "Knowledge-injection study"},
        {"calibration.csv", "Calibration"},
    };
    for (const auto& [table, title] : tables) {
        std::string path = store.path(table);
        if (!util::file_exists(path)) continue;
        util::Csv csv = util::read_csv(path);
        md += "## " + std::string(title) + "\n\n" + render_markdown_table(csv) + "\n";
    }

    // confidence records double as a CSV artifact so they can feed the
    // calibrate subcommand directly
    auto confidences = store.load_confidences();
    if (!confidences.empty()) {
        util::write_csv(store.path("confidences.csv"),
                        confidence_records_to_csv(confidences));
    }

    md += "## Artifacts\n\n";
    for (const char* file :
         {RunStore::kSamplesFile, RunStore::kDistributionsFile, RunStore::kDiagnosesFile,
          RunStore::kInterventionsFile, RunStore::kConfidencesFile}) {
        std::string path = store.path(file);
        if (!util::file_exists(path)) continue;
        md += "- " + std::string(file) + " (" +
              std::to_string(store.load_records(file).size()) + " records)\n";
    }

    ReportSummary summary;
    summary.report_path = store.path("report.md");
    util::write_file(summary.report_path, md);

    manifest.stages[Stage::Report] = StageState::Done;
    store.save_manifest(manifest);

    out << "report written to " << summary.report_path << "\n";
    return summary;
}

void run_full_pipeline(const CliConfig& config, std::ostream& out) {
    cmd_quantify(config, out);
    cmd_diagnose(config, out);
    cmd_validate(config, StudyKind::Clarify, out);
    cmd_validate(config, StudyKind::Inject, out);
    cmd_report(config, out);
}

} // namespace uqdiag
