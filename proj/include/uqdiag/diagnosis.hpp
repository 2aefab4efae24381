#pragma once
// Two-phase uncertainty diagnosis: filter questions whose answer entropy
// exceeds tau, then run the auxiliary model twice per flagged question —
// attribution (which of the three causes) and, unless the cause is pure
// question ambiguity, knowledge-gap extraction.

#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "gateway.hpp"

namespace uqdiag {

struct DiagnosisConfig {
    double tau = 0.89;                  // entropy threshold, nats
    std::string auxiliary_model;
    std::string attribution_prompt_template;   // needs {question} and {answers}
    std::string extraction_prompt_template;    // needs {question} and {answers}
    int max_label_retries = 2;          // extra attempts after the first
    int answer_char_budget = 1500;      // per-answer truncation in prompts
    int max_tokens = 1024;

    DiagnosisConfig();                  // fills in the default templates

    // Throws InvalidConfig when tau <= 0 or a template lacks a placeholder.
    void validate() const;
};

// Ids of distributions with entropy strictly above tau, in input order.
std::vector<std::string> filter_high_uncertainty(const std::vector<AnswerDistribution>& dists,
                                                 double tau);

// Renders the numbered answer block ("Answer 1: ...") in sample order.
// Permuting the input only permutes the numbering, never the content.
std::string render_answer_block(const std::vector<AnswerSample>& samples,
                                int char_budget);

// Finds the earliest case-insensitive occurrence of one of the three labels
// in a reply; "both" is matched on word boundaries and checked first so it is
// never shadowed. Empty optional when no label is present.
std::optional<DiagnosisLabel> parse_diagnosis_label(const std::string& reply);

// Step 1: attribution. Returns a record with label and rationale (no
// knowledge gap). Unparseable replies are retried with a follow-up turn up to
// max_label_retries times, then LabelUnparseable.
DiagnosisRecord attribute_uncertainty(const Question& question,
                                      const std::vector<AnswerSample>& samples,
                                      const DiagnosisConfig& config, Backend& backend);

// Step 2: extraction. Returns the concise missing-knowledge phrase parsed
// from the final "Missing Knowledge:" line, plus the full analysis text.
struct KnowledgeExtraction {
    std::string knowledge;
    std::string rationale;
};

KnowledgeExtraction extract_knowledge_gap(const Question& question,
                                          const std::vector<AnswerSample>& samples,
                                          const DiagnosisConfig& config, Backend& backend);

// Runs the full per-question pipeline over a corpus: unflagged questions
// produce no outcome; flagged ones get attribution, then extraction iff the
// label is not QuestionAmbiguity. Output order matches corpus order and
// per-question failures are recorded in the outcome, never thrown.
std::vector<DiagnosisOutcome> diagnose_corpus(
    const std::vector<Question>& questions,
    const std::vector<AnswerDistribution>& dists,
    const std::vector<std::vector<AnswerSample>>& samples_per_question,
    const DiagnosisConfig& config, Backend& backend);

} // namespace uqdiag
