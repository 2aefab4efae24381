#include "uqdiag/diagnosis.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "uqdiag/errors.hpp"
#include "uqdiag/prompts.hpp"
#include "uqdiag/util.hpp"

namespace uqdiag {

DiagnosisConfig::DiagnosisConfig()
    : attribution_prompt_template(prompts::kAttribution),
      extraction_prompt_template(prompts::kExtraction) {}

void DiagnosisConfig::validate() const {
    if (!(tau > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "tau must be positive");
    }
    for (const auto* tmpl : {&attribution_prompt_template, &extraction_prompt_template}) {
        if (!util::contains_placeholder(*tmpl, "question") ||
            !util::contains_placeholder(*tmpl, "answers")) {
            throw Error(ErrorCode::InvalidConfig,
                        "prompt template must contain {question} and {answers}");
        }
    }
    if (max_label_retries < 0) {
        throw Error(ErrorCode::InvalidConfig, "max_label_retries must be >= 0");
    }
}

std::vector<std::string> filter_high_uncertainty(const std::vector<AnswerDistribution>& dists,
                                                 double tau) {
    std::vector<std::string> flagged;
    for (const auto& dist : dists) {
        if (dist.entropy > tau) flagged.push_back(dist.question_id);
    }
    return flagged;
}

std::string render_answer_block(const std::vector<AnswerSample>& samples, int char_budget) {
    std::vector<AnswerSample> ordered(samples);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const AnswerSample& a, const AnswerSample& b) {
                         return a.sample_index < b.sample_index;
                     });
    std::string block;
    int number = 1;
    for (const auto& sample : ordered) {
        std::string text = sample.raw_text;
        if (char_budget > 0 && text.size() > static_cast<std::size_t>(char_budget)) {
            text.resize(static_cast<std::size_t>(char_budget));
        }
        block += "Answer " + std::to_string(number++) + ": " + text + "\n";
    }
    if (!block.empty()) block.pop_back();
    return block;
}

namespace {

// Position of `needle` in lowercase `haystack`, requiring word boundaries.
std::size_t find_word_ci(const std::string& haystack_lower, const std::string& needle) {
    std::size_t from = 0;
    while (true) {
        std::size_t pos = haystack_lower.find(needle, from);
        if (pos == std::string::npos) return std::string::npos;
        bool left_ok =
            pos == 0 || !std::isalnum(static_cast<unsigned char>(haystack_lower[pos - 1]));
        std::size_t end = pos + needle.size();
        bool right_ok = end >= haystack_lower.size() ||
                        !std::isalpha(static_cast<unsigned char>(haystack_lower[end]));
        if (left_ok && right_ok) return pos;
        from = pos + 1;
    }
}

std::string render_diagnosis_prompt(const std::string& tmpl, const Question& question,
                                    const std::vector<AnswerSample>& samples,
                                    int char_budget) {
    std::string question_text = question.text;
    if (question.is_multiple_choice()) {
        question_text += "\nOptions:";
        for (const auto& choice : question.choices) {
            question_text += "\n" + choice.label + ". " + choice.text;
        }
    }
    return util::render_template(
        tmpl, {{"question", question_text},
               {"answers", render_answer_block(samples, char_budget)},
               {"n", std::to_string(samples.size())}});
}

} // namespace

std::optional<DiagnosisLabel> parse_diagnosis_label(const std::string& reply) {
    const std::string lower = util::to_lower(reply);
    // "both" first so it can never be shadowed, then earliest match wins
    struct Candidate {
        std::size_t pos;
        DiagnosisLabel label;
    };
    std::vector<Candidate> candidates;
    std::size_t pos = find_word_ci(lower, "both");
    if (pos != std::string::npos) candidates.push_back({pos, DiagnosisLabel::Both});
    pos = lower.find("question ambiguity");
    if (pos != std::string::npos) {
        candidates.push_back({pos, DiagnosisLabel::QuestionAmbiguity});
    }
    pos = lower.find("knowledge gap");
    if (pos != std::string::npos) {
        candidates.push_back({pos, DiagnosisLabel::KnowledgeGaps});
    }
    if (candidates.empty()) return std::nullopt;
    auto best = std::min_element(candidates.begin(), candidates.end(),
                                 [](const Candidate& a, const Candidate& b) {
                                     return a.pos < b.pos;   // stable: "both" wins ties
                                 });
    return best->label;
}

DiagnosisRecord attribute_uncertainty(const Question& question,
                                      const std::vector<AnswerSample>& samples,
                                      const DiagnosisConfig& config, Backend& backend) {
    config.validate();
    if (samples.empty()) {
        throw Error(ErrorCode::Precondition, "attribution needs the sampled answers");
    }

    GenerationRequest request;
    request.model = config.auxiliary_model;
    request.messages = {{"user", render_diagnosis_prompt(config.attribution_prompt_template,
                                                         question, samples,
                                                         config.answer_char_budget)}};
    request.temperature = 0.0;   // a verdict, not a sample
    request.max_tokens = config.max_tokens;
    request.request_tag = question.id + "#attr";

    std::string reply;
    for (int attempt = 0; attempt <= config.max_label_retries; ++attempt) {
        GenerationResponse response = backend.generate(request);
        reply = response.text;
        auto label = parse_diagnosis_label(reply);
        if (label) {
            DiagnosisRecord record;
            record.question_id = question.id;
            record.label = *label;
            record.rationale = reply;
            record.auxiliary_model = config.auxiliary_model;
            return record;
        }
        // keep the failed reply in the conversation and ask again
        request.messages.push_back({"assistant", reply});
        request.messages.push_back({"user", prompts::kLabelReask});
    }
    throw Error(ErrorCode::LabelUnparseable,
                "no label after " + std::to_string(config.max_label_retries + 1) +
                    " attempts; last reply: '" + reply + "'");
}

KnowledgeExtraction extract_knowledge_gap(const Question& question,
                                          const std::vector<AnswerSample>& samples,
                                          const DiagnosisConfig& config, Backend& backend) {
    config.validate();
    if (samples.empty()) {
        throw Error(ErrorCode::Precondition, "extraction needs the sampled answers");
    }

    GenerationRequest request;
    request.model = config.auxiliary_model;
    request.messages = {{"user", render_diagnosis_prompt(config.extraction_prompt_template,
                                                         question, samples,
                                                         config.answer_char_budget)}};
    request.temperature = 0.0;
    request.max_tokens = config.max_tokens;
    request.request_tag = question.id + "#extract";
    GenerationResponse response = backend.generate(request);

    // the knowledge phrase lives on the last "Missing Knowledge:" line
    auto lines = util::split_lines(response.text);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        std::string line = util::trim(*it);
        if (util::starts_with_ci(line, "missing knowledge")) {
            std::size_t colon = line.find(':');
            if (colon == std::string::npos) continue;
            std::string knowledge = util::trim(line.substr(colon + 1));
            if (knowledge.empty()) continue;
            return {knowledge, response.text};
        }
    }
    throw Error(ErrorCode::ExtractionUnparseable,
                "no 'Missing Knowledge:' line in reply: '" + response.text + "'");
}

std::vector<DiagnosisOutcome> diagnose_corpus(
    const std::vector<Question>& questions, const std::vector<AnswerDistribution>& dists,
    const std::vector<std::vector<AnswerSample>>& samples_per_question,
    const DiagnosisConfig& config, Backend& backend) {
    config.validate();
    if (questions.size() != dists.size() || questions.size() != samples_per_question.size()) {
        throw Error(ErrorCode::Precondition,
                    "questions, distributions and samples must align");
    }

    std::vector<DiagnosisOutcome> outcomes;
    for (std::size_t i = 0; i < questions.size(); ++i) {
        if (!(dists[i].entropy > config.tau)) continue;

        DiagnosisOutcome outcome;
        outcome.question_id = questions[i].id;
        try {
            DiagnosisRecord record =
                attribute_uncertainty(questions[i], samples_per_question[i], config, backend);
            if (record.label != DiagnosisLabel::QuestionAmbiguity) {
                KnowledgeExtraction extraction =
                    extract_knowledge_gap(questions[i], samples_per_question[i], config, backend);
                record.knowledge_gap = extraction.knowledge;
                record.rationale += "\n---\n" + extraction.rationale;
            }
            outcome.record = std::move(record);
        } catch (const Error& e) {
            outcome.error = e.what();
        }
        outcomes.push_back(std::move(outcome));
    }
    return outcomes;
}

} // namespace uqdiag
