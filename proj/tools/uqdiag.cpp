// uqdiag: quantify a model's answer uncertainty, diagnose its source, and
// validate the diagnosis with clarification / knowledge-injection studies.
//
//   uqdiag quantify  --corpus data.jsonl --run runs/demo --backend scripted --fixture fx.json
//   uqdiag diagnose  --run runs/demo --backend scripted --fixture fx.json
//   uqdiag validate  --run runs/demo --study clarify ...
//   uqdiag calibrate --records confidences.csv
//   uqdiag report    --run runs/demo

#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "uqdiag/errors.hpp"
#include "uqdiag/pipeline.hpp"
#include "uqdiag/util.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::string run_dir;
    std::string backend;
    std::string fixture;
    std::string corpus;
    std::string cache;
    double tau = -1.0;
    int n_samples = -1;
    int bins = -1;
    int concurrency = -1;
    std::string knowledge_source;
    bool no_cache = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--run", flags.run_dir, "run directory");
    cmd->add_option("--backend", flags.backend, "live|replay|scripted");
    cmd->add_option("--fixture", flags.fixture, "fixture file (replay/scripted)");
    cmd->add_option("--corpus", flags.corpus, "corpus JSONL file");
    cmd->add_option("--cache", flags.cache, "response cache file (default <run>/cache.jsonl)");
    cmd->add_option("--tau", flags.tau, "uncertainty threshold (nats)");
    cmd->add_option("--n-samples", flags.n_samples, "samples per question");
    cmd->add_option("--bins", flags.bins, "calibration bins");
    cmd->add_option("--concurrency", flags.concurrency, "parallel questions");
    cmd->add_option("--knowledge-source", flags.knowledge_source, "search|synthesis");
    cmd->add_flag("--no-cache", flags.no_cache, "disable the response cache");
}

uqdiag::CliConfig build_config(const CommonFlags& flags) {
    uqdiag::CliConfig config;
    if (!flags.config_path.empty()) {
        nlohmann::json j =
            nlohmann::json::parse(uqdiag::util::read_file(flags.config_path), nullptr, false);
        if (j.is_discarded()) {
            throw uqdiag::Error(uqdiag::ErrorCode::ParseError,
                                "config file is not valid JSON: " + flags.config_path);
        }
        config.apply_json(j);
    }
    if (!flags.run_dir.empty()) config.run_dir = flags.run_dir;
    if (!flags.backend.empty()) {
        auto mode = uqdiag::backend_mode_from_string(flags.backend);
        if (!mode) {
            throw uqdiag::Error(uqdiag::ErrorCode::InvalidConfig,
                                "unknown backend '" + flags.backend + "'");
        }
        config.backend = *mode;
    }
    if (!flags.fixture.empty()) config.fixture_path = flags.fixture;
    if (!flags.corpus.empty()) config.corpus_path = flags.corpus;
    if (!flags.cache.empty()) config.cache_path = flags.cache;
    if (flags.tau >= 0.0) config.tau = flags.tau;
    if (flags.n_samples > 0) config.n_samples = flags.n_samples;
    if (flags.bins > 0) config.n_bins = flags.bins;
    if (flags.concurrency > 0) config.concurrency = flags.concurrency;
    if (!flags.knowledge_source.empty()) {
        auto source = uqdiag::knowledge_source_from_string(flags.knowledge_source);
        if (!source) {
            throw uqdiag::Error(uqdiag::ErrorCode::InvalidConfig,
                                "unknown knowledge source '" + flags.knowledge_source + "'");
        }
        config.knowledge_source = *source;
    }
    if (flags.no_cache) config.use_cache = false;
    if (config.run_dir.empty()) {
        throw uqdiag::Error(uqdiag::ErrorCode::InvalidConfig, "--run is required");
    }
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LLM uncertainty quantification and diagnosis"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string study = "clarify";
    std::string records_path;

    CLI::App* quantify = app.add_subcommand("quantify", "sample answers and compute uncertainty");
    add_common_flags(quantify, flags);
    CLI::App* diagnose = app.add_subcommand("diagnose", "attribute uncertainty and extract gaps");
    add_common_flags(diagnose, flags);
    CLI::App* validate = app.add_subcommand("validate", "run an intervention study");
    add_common_flags(validate, flags);
    validate->add_option("--study", study, "clarify|inject")->required();
    CLI::App* calibrate = app.add_subcommand("calibrate", "score confidence calibration");
    add_common_flags(calibrate, flags);
    calibrate->add_option("--records", records_path, "confidence records CSV");
    CLI::App* report = app.add_subcommand("report", "bundle run artifacts into report.md");
    add_common_flags(report, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        uqdiag::CliConfig config = build_config(flags);
        if (quantify->parsed()) {
            uqdiag::cmd_quantify(config, std::cout);
        } else if (diagnose->parsed()) {
            uqdiag::cmd_diagnose(config, std::cout);
        } else if (validate->parsed()) {
            if (study == "clarify") {
                uqdiag::cmd_validate(config, uqdiag::StudyKind::Clarify, std::cout);
            } else if (study == "inject") {
                uqdiag::cmd_validate(config, uqdiag::StudyKind::Inject, std::cout);
            } else {
                std::cerr << "unknown study '" << study << "' (use clarify or inject)\n";
                return 2;
            }
        } else if (calibrate->parsed()) {
            uqdiag::cmd_calibrate(config, records_path, std::cout);
        } else if (report->parsed()) {
            uqdiag::cmd_report(config, std::cout);
        }
    } catch (const uqdiag::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
