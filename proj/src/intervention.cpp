#include "uqdiag/intervention.hpp"

#include <algorithm>
#include <map>

#include "uqdiag/errors.hpp"
#include "uqdiag/prompts.hpp"
#include "uqdiag/util.hpp"

namespace uqdiag {

const char* to_string(KnowledgeSource source) {
    switch (source) {
        case KnowledgeSource::WebSearch: return "web_search";
        case KnowledgeSource::PromptSynthesis: return "prompt_synthesis";
    }
    return "?";
}

std::optional<KnowledgeSource> knowledge_source_from_string(const std::string& name) {
    std::string n = util::to_lower(name);
    if (n == "web_search" || n == "search") return KnowledgeSource::WebSearch;
    if (n == "prompt_synthesis" || n == "synthesis") return KnowledgeSource::PromptSynthesis;
    return std::nullopt;
}

InterventionConfig::InterventionConfig()
    : clarification_prompt_template(prompts::kClarification),
      synthesis_prompt_template(prompts::kSynthesis) {}

void InterventionConfig::validate() const {
    if (!util::contains_placeholder(clarification_prompt_template, "question")) {
        throw Error(ErrorCode::InvalidConfig,
                    "clarification template must contain {question}");
    }
    if (!util::contains_placeholder(synthesis_prompt_template, "concept")) {
        throw Error(ErrorCode::InvalidConfig, "synthesis template must contain {concept}");
    }
}

Question clarify_question(const Question& question, const InterventionConfig& config,
                          Backend& backend) {
    config.validate();
    if (util::trim(question.text).empty()) {
        throw Error(ErrorCode::Precondition, "cannot clarify an empty question");
    }

    GenerationRequest request;
    request.model = config.auxiliary_model;
    request.messages = {{"user", util::render_template(config.clarification_prompt_template,
                                                       {{"question", question.text}})}};
    request.temperature = 0.0;
    request.max_tokens = config.max_tokens;
    request.request_tag = question.id + "#clarify";
    GenerationResponse response = backend.generate(request);

    std::string text = util::trim(response.text);
    for (const char* prefix : {"clarified question:", "rewritten question:", "question:"}) {
        if (util::starts_with_ci(text, prefix)) {
            text = util::trim(text.substr(std::string(prefix).size()));
            break;
        }
    }
    Question clarified = question;
    if (!text.empty()) clarified.text = text;
    clarified.revision = "clarified";
    return clarified;
}

std::string acquire_knowledge(const std::string& gap, const InterventionConfig& config,
                              Backend& backend, SearchProvider& search) {
    config.validate();
    if (util::trim(gap).empty()) {
        throw Error(ErrorCode::Precondition, "empty knowledge gap");
    }

    auto synthesize = [&]() {
        GenerationRequest request;
        request.model = config.auxiliary_model;
        request.messages = {{"user", util::render_template(config.synthesis_prompt_template,
                                                           {{"concept", gap}})}};
        request.temperature = 0.0;
        request.max_tokens = config.max_tokens;
        request.request_tag = gap + "#synth";
        return backend.generate(request).text;
    };

    std::string passage;
    if (config.knowledge_source == KnowledgeSource::WebSearch) {
        try {
            passage = search.web_search(gap);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::SearchUnavailable && config.fall_back_to_synthesis) {
                passage = synthesize();
            } else {
                throw;
            }
        }
    } else {
        passage = synthesize();
    }

    passage = util::trim(passage);
    if (config.passage_char_budget > 0 &&
        passage.size() > static_cast<std::size_t>(config.passage_char_budget)) {
        passage.resize(static_cast<std::size_t>(config.passage_char_budget));
    }
    return passage;
}

std::optional<double> majority_correct(const AnswerDistribution& dist, const Question& question,
                                       const Normalization& norm) {
    if (!question.gold_answer) return std::nullopt;
    std::string majority = question.is_multiple_choice()
                               ? dist.majority_answer
                               : normalize_answer(dist.majority_answer, norm);
    auto matches = [&](const std::string& gold) {
        std::string g = question.is_multiple_choice() ? util::trim(gold)
                                                      : normalize_answer(gold, norm);
        return majority == g;
    };
    if (matches(*question.gold_answer)) return 1.0;
    for (const auto& alias : question.gold_aliases) {
        if (matches(alias)) return 1.0;
    }
    return 0.0;
}

EvalOutcome inject_and_reevaluate(const Question& question, const std::string& context,
                                  const SamplingConfig& sampling, Backend& backend,
                                  const std::string& stage) {
    if (util::trim(context).empty()) {
        throw Error(ErrorCode::Precondition, "injection context is empty");
    }
    std::vector<AnswerSample> samples =
        sample_answers(question, sampling, backend, context, stage);

    EvalOutcome outcome;
    outcome.distribution = build_distribution(samples);
    outcome.majority_correct =
        majority_correct(outcome.distribution, question, sampling.normalization);
    if (question.gold_answer) {
        auto matches_gold = [&](const std::string& answer) {
            std::string a = question.is_multiple_choice()
                                ? answer
                                : normalize_answer(answer, sampling.normalization);
            std::string g = question.is_multiple_choice()
                                ? util::trim(*question.gold_answer)
                                : normalize_answer(*question.gold_answer, sampling.normalization);
            if (a == g) return true;
            for (const auto& alias : question.gold_aliases) {
                std::string al = question.is_multiple_choice()
                                     ? util::trim(alias)
                                     : normalize_answer(alias, sampling.normalization);
                if (a == al) return true;
            }
            return false;
        };
        int hits = 0;
        for (const auto& sample : samples) {
            if (matches_gold(sample.extracted_answer)) ++hits;
        }
        outcome.sample_accuracy =
            static_cast<double>(hits) / static_cast<double>(samples.size());
    }
    return outcome;
}

InterventionResult reduction_metrics(const Measurement& before, const Measurement& after) {
    if (before.uncertainty < 0.0 || after.uncertainty < 0.0) {
        throw Error(ErrorCode::Precondition, "uncertainty cannot be negative");
    }
    InterventionResult result;
    result.unc_before = before.uncertainty;
    result.unc_after = after.uncertainty;
    result.acc_before = before.accuracy;
    result.acc_after = after.accuracy;
    result.unc_reduction_rate =
        before.uncertainty > 0.0
            ? 100.0 * (before.uncertainty - after.uncertainty) / before.uncertainty
            : 0.0;
    if (before.accuracy && after.accuracy) {
        result.acc_improvement_rate = 100.0 * (*after.accuracy - *before.accuracy);
    }
    return result;
}

namespace {

// Group means with the printed-table convention: means are rounded to the
// printed precision and the rate is recomputed from the rounded values, so a
// reader can reproduce every rate from the table itself.
StudyRow make_row(std::optional<DiagnosisLabel> label,
                  const std::vector<const InterventionResult*>& group) {
    StudyRow row;
    row.label = label;
    row.n = static_cast<int>(group.size());
    double acc_before_sum = 0.0, acc_after_sum = 0.0;
    int acc_n = 0;
    for (const auto* r : group) {
        row.unc_before += r->unc_before;
        row.unc_after += r->unc_after;
        if (r->acc_before && r->acc_after) {
            acc_before_sum += *r->acc_before;
            acc_after_sum += *r->acc_after;
            ++acc_n;
        }
    }
    row.unc_before = util::round_fixed(row.unc_before / row.n, 3);
    row.unc_after = util::round_fixed(row.unc_after / row.n, 3);
    row.unc_reduction_rate =
        row.unc_before > 0.0
            ? 100.0 * (row.unc_before - row.unc_after) / row.unc_before
            : 0.0;
    if (acc_n > 0) {
        row.acc_before = util::round_fixed(100.0 * acc_before_sum / acc_n, 2) / 100.0;
        row.acc_after = util::round_fixed(100.0 * acc_after_sum / acc_n, 2) / 100.0;
        row.acc_improvement_rate = 100.0 * (*row.acc_after - *row.acc_before);
    }
    return row;
}

} // namespace

StudyReport aggregate_study(InterventionKind kind,
                            std::vector<InterventionResult> per_question,
                            int skipped_failed_diagnoses) {
    StudyReport report;
    report.kind = kind;
    report.per_question = std::move(per_question);
    report.skipped_failed_diagnoses = skipped_failed_diagnoses;
    if (report.per_question.empty()) return report;

    if (kind == InterventionKind::Clarification) {
        constexpr DiagnosisLabel kOrder[] = {DiagnosisLabel::QuestionAmbiguity,
                                             DiagnosisLabel::Both,
                                             DiagnosisLabel::KnowledgeGaps};
        for (DiagnosisLabel label : kOrder) {
            std::vector<const InterventionResult*> group;
            for (const auto& r : report.per_question) {
                if (r.label == label) group.push_back(&r);
            }
            if (!group.empty()) report.rows.push_back(make_row(label, group));
        }
    } else {
        std::vector<const InterventionResult*> all;
        for (const auto& r : report.per_question) all.push_back(&r);
        report.rows.push_back(make_row(std::nullopt, all));
    }
    return report;
}

namespace {

std::map<std::string, const Question*> index_questions(const std::vector<Question>& corpus) {
    std::map<std::string, const Question*> by_id;
    for (const auto& q : corpus) by_id[q.id] = &q;
    return by_id;
}

std::map<std::string, const AnswerDistribution*> index_dists(
    const std::vector<AnswerDistribution>& dists) {
    std::map<std::string, const AnswerDistribution*> by_id;
    for (const auto& d : dists) by_id[d.question_id] = &d;
    return by_id;
}

} // namespace

StudyReport run_clarification_study(const std::vector<Question>& corpus,
                                    const std::vector<AnswerDistribution>& dists,
                                    const std::vector<DiagnosisOutcome>& diagnoses,
                                    const SamplingConfig& sampling,
                                    const InterventionConfig& config, Backend& backend) {
    auto questions = index_questions(corpus);
    auto distributions = index_dists(dists);

    std::vector<InterventionResult> results;
    int skipped = 0;
    for (const auto& outcome : diagnoses) {
        if (!outcome.ok()) {
            ++skipped;
            continue;
        }
        auto q_it = questions.find(outcome.question_id);
        auto d_it = distributions.find(outcome.question_id);
        if (q_it == questions.end() || d_it == distributions.end()) {
            throw Error(ErrorCode::Precondition,
                        "no corpus entry or distribution for diagnosed question '" +
                            outcome.question_id + "'");
        }
        const Question& question = *q_it->second;
        const AnswerDistribution& before_dist = *d_it->second;

        Question clarified = clarify_question(question, config, backend);
        std::vector<AnswerSample> samples =
            sample_answers(clarified, sampling, backend, std::nullopt, "clarify-sample");
        AnswerDistribution after_dist = build_distribution(samples);

        Measurement before{before_dist.entropy,
                           majority_correct(before_dist, question, sampling.normalization)};
        Measurement after{after_dist.entropy,
                          majority_correct(after_dist, question, sampling.normalization)};
        InterventionResult result = reduction_metrics(before, after);
        result.question_id = question.id;
        result.kind = InterventionKind::Clarification;
        result.modified_context = clarified.text;
        result.label = outcome.record->label;
        results.push_back(std::move(result));
    }
    return aggregate_study(InterventionKind::Clarification, std::move(results), skipped);
}

StudyReport run_injection_study(const std::vector<Question>& corpus,
                                const std::vector<AnswerDistribution>& dists,
                                const std::vector<DiagnosisOutcome>& diagnoses,
                                const SamplingConfig& sampling,
                                const InterventionConfig& config, Backend& backend,
                                SearchProvider& search) {
    auto questions = index_questions(corpus);
    auto distributions = index_dists(dists);

    std::vector<InterventionResult> results;
    int skipped = 0;
    for (const auto& outcome : diagnoses) {
        if (!outcome.ok()) {
            ++skipped;
            continue;
        }
        const DiagnosisRecord& record = *outcome.record;
        if (record.label == DiagnosisLabel::QuestionAmbiguity) continue;
        if (!record.knowledge_gap) {
            throw Error(ErrorCode::Precondition,
                        "record labeled " + std::string(to_string(record.label)) +
                            " without extracted knowledge");
        }
        auto q_it = questions.find(outcome.question_id);
        auto d_it = distributions.find(outcome.question_id);
        if (q_it == questions.end() || d_it == distributions.end()) {
            throw Error(ErrorCode::Precondition,
                        "no corpus entry or distribution for diagnosed question '" +
                            outcome.question_id + "'");
        }
        const Question& question = *q_it->second;
        const AnswerDistribution& before_dist = *d_it->second;

        std::string passage = acquire_knowledge(*record.knowledge_gap, config, backend, search);
        EvalOutcome after = inject_and_reevaluate(question, passage, sampling, backend);

        Measurement before_m{before_dist.entropy,
                             majority_correct(before_dist, question, sampling.normalization)};
        Measurement after_m{after.distribution.entropy, after.majority_correct};
        InterventionResult result = reduction_metrics(before_m, after_m);
        result.question_id = question.id;
        result.kind = InterventionKind::KnowledgeInjection;
        result.modified_context = passage;
        result.label = record.label;
        results.push_back(std::move(result));
    }
    return aggregate_study(InterventionKind::KnowledgeInjection, std::move(results), skipped);
}

} // namespace uqdiag
