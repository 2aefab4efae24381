#pragma once
// Core domain types. Plain immutable-by-convention value objects shared by
// every other module; no I/O and no serialization here.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace uqdiag {

// One multiple-choice option.
struct Choice {
    std::string label;
    std::string text;

    bool operator==(const Choice&) const = default;
};

// A corpus item. `choices` empty means open-ended. `gold_answer` is optional:
// open-ended datasets may accept several phrasings, so the first gold goes in
// gold_answer and the rest in gold_aliases.
struct Question {
    std::string id;
    std::string text;
    std::vector<Choice> choices;
    std::optional<std::string> gold_answer;
    std::vector<std::string> gold_aliases;
    std::string dataset_tag;
    // Set when the text was rewritten by an intervention ("clarified").
    // The id stays stable so records join across stages.
    std::string revision;

    bool is_multiple_choice() const { return !choices.empty(); }
    bool operator==(const Question&) const = default;
};

// One sampled model response. `extracted_answer` is the canonical final
// answer, or the sentinel "UNPARSED" when extraction failed (failed samples
// stay in the distribution rather than being dropped).
struct AnswerSample {
    std::string question_id;
    int sample_index = 0;
    std::string raw_text;
    std::string extracted_answer;
    nlohmann::json provider_meta;
};

inline constexpr const char* kUnparsedAnswer = "UNPARSED";

// One unique-answer cluster of a distribution.
struct AnswerCluster {
    std::string answer;
    int count = 0;
    double probability = 0.0;
};

// Empirical distribution over unique sampled answers.
// Invariants: counts sum to n_samples, probabilities sum to 1 (within 1e-9),
// 0 <= entropy <= ln(n_samples). Entropy is stored in nats.
// Clusters are ordered by first occurrence among the samples, which is also
// the tie-break order for the majority answer.
struct AnswerDistribution {
    std::string question_id;
    std::vector<AnswerCluster> clusters;
    int n_samples = 0;
    double entropy = 0.0;
    std::string majority_answer;
    double majority_confidence = 0.0;
};

enum class DiagnosisLabel {
    QuestionAmbiguity,
    KnowledgeGaps,
    Both,
};

const char* to_string(DiagnosisLabel label);
std::optional<DiagnosisLabel> diagnosis_label_from_string(const std::string& name);

// Verdict of the auxiliary model for one high-uncertainty question.
// Invariant: knowledge_gap is present iff label is KnowledgeGaps or Both.
struct DiagnosisRecord {
    std::string question_id;
    DiagnosisLabel label = DiagnosisLabel::QuestionAmbiguity;
    std::string rationale;
    std::optional<std::string> knowledge_gap;
    std::string auxiliary_model;
};

// Per-question diagnosis result: either a record or an error note. Batch
// diagnosis never aborts on one bad question; it records the failure here.
struct DiagnosisOutcome {
    std::string question_id;
    std::optional<DiagnosisRecord> record;
    std::string error;

    bool ok() const { return record.has_value(); }
};

enum class InterventionKind {
    Clarification,
    KnowledgeInjection,
};

const char* to_string(InterventionKind kind);
std::optional<InterventionKind> intervention_kind_from_string(const std::string& name);

// Paired before/after measurement for one question.
// unc_reduction_rate = 100*(before-after)/before (0 when before == 0);
// acc_improvement_rate = 100*(acc_after-acc_before), i.e. percentage points.
// Accuracies are fractions in [0,1]; per-question accuracy follows the
// majority-vote convention (majority answer == gold).
struct InterventionResult {
    std::string question_id;
    InterventionKind kind = InterventionKind::Clarification;
    std::string modified_context;
    double unc_before = 0.0;
    double unc_after = 0.0;
    std::optional<double> acc_before;
    std::optional<double> acc_after;
    double unc_reduction_rate = 0.0;
    std::optional<double> acc_improvement_rate;
    std::optional<DiagnosisLabel> label;
};

enum class ConfidenceMethod {
    Verbalization,
    Perplexity,
    SelfConsistency,
};

const char* to_string(ConfidenceMethod method);
std::optional<ConfidenceMethod> confidence_method_from_string(const std::string& name);

// One (confidence, correctness) pair used by the calibration metrics.
struct ConfidenceRecord {
    std::string question_id;
    ConfidenceMethod method = ConfidenceMethod::SelfConsistency;
    double confidence = 0.0;
    bool correct = false;
};

// Corpus validation. Reports problems, never throws.
enum class ValidationRule {
    DuplicateId,
    EmptyId,
    EmptyText,
    DuplicateChoiceLabel,
    EmptyChoiceLabel,
};

const char* to_string(ValidationRule rule);

struct ValidationIssue {
    std::string question_id;
    ValidationRule rule = ValidationRule::DuplicateId;
    std::string detail;
};

std::vector<ValidationIssue> validate_corpus(const std::vector<Question>& questions);

} // namespace uqdiag
