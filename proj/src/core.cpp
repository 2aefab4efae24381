#include "uqdiag/core.hpp"

#include <set>

#include "uqdiag/errors.hpp"
#include "uqdiag/util.hpp"

namespace uqdiag {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
        case ErrorCode::AuthError: return "AuthError";
        case ErrorCode::LogprobsUnsupported: return "LogprobsUnsupported";
        case ErrorCode::FixtureExhausted: return "FixtureExhausted";
        case ErrorCode::SearchUnavailable: return "SearchUnavailable";
        case ErrorCode::ConfidenceUnparseable: return "ConfidenceUnparseable";
        case ErrorCode::MixedQuestionIds: return "MixedQuestionIds";
        case ErrorCode::EmptyLikelihoods: return "EmptyLikelihoods";
        case ErrorCode::OutOfRangeLikelihood: return "OutOfRangeLikelihood";
        case ErrorCode::LabelUnparseable: return "LabelUnparseable";
        case ErrorCode::ExtractionUnparseable: return "ExtractionUnparseable";
        case ErrorCode::EmptyRecords: return "EmptyRecords";
        case ErrorCode::DegenerateClasses: return "DegenerateClasses";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationFailed: return "ValidationFailed";
        case ErrorCode::ManifestCorrupt: return "ManifestCorrupt";
        case ErrorCode::ConfigMismatch: return "ConfigMismatch";
        case ErrorCode::StageOrderError: return "StageOrderError";
        case ErrorCode::EmptyCorpus: return "EmptyCorpus";
        case ErrorCode::LockHeld: return "LockHeld";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::Precondition: return "Precondition";
    }
    return "UnknownError";
}

const char* to_string(DiagnosisLabel label) {
    switch (label) {
        case DiagnosisLabel::QuestionAmbiguity: return "question_ambiguity";
        case DiagnosisLabel::KnowledgeGaps: return "knowledge_gaps";
        case DiagnosisLabel::Both: return "both";
    }
    return "?";
}

std::optional<DiagnosisLabel> diagnosis_label_from_string(const std::string& name) {
    std::string n = util::to_lower(name);
    if (n == "question_ambiguity") return DiagnosisLabel::QuestionAmbiguity;
    if (n == "knowledge_gaps") return DiagnosisLabel::KnowledgeGaps;
    if (n == "both") return DiagnosisLabel::Both;
    return std::nullopt;
}

const char* to_string(InterventionKind kind) {
    switch (kind) {
        case InterventionKind::Clarification: return "clarification";
        case InterventionKind::KnowledgeInjection: return "knowledge_injection";
    }
    return "?";
}

std::optional<InterventionKind> intervention_kind_from_string(const std::string& name) {
    std::string n = util::to_lower(name);
    if (n == "clarification") return InterventionKind::Clarification;
    if (n == "knowledge_injection") return InterventionKind::KnowledgeInjection;
    return std::nullopt;
}

const char* to_string(ConfidenceMethod method) {
    switch (method) {
        case ConfidenceMethod::Verbalization: return "verbalization";
        case ConfidenceMethod::Perplexity: return "perplexity";
        case ConfidenceMethod::SelfConsistency: return "self_consistency";
    }
    return "?";
}

std::optional<ConfidenceMethod> confidence_method_from_string(const std::string& name) {
    std::string n = util::to_lower(name);
    if (n == "verbalization" || n == "verb") return ConfidenceMethod::Verbalization;
    if (n == "perplexity" || n == "ppl") return ConfidenceMethod::Perplexity;
    if (n == "self_consistency" || n == "sc") return ConfidenceMethod::SelfConsistency;
    return std::nullopt;
}

const char* to_string(ValidationRule rule) {
    switch (rule) {
        case ValidationRule::DuplicateId: return "DuplicateId";
        case ValidationRule::EmptyId: return "EmptyId";
        case ValidationRule::EmptyText: return "EmptyText";
        case ValidationRule::DuplicateChoiceLabel: return "DuplicateChoiceLabel";
        case ValidationRule::EmptyChoiceLabel: return "EmptyChoiceLabel";
    }
    return "?";
}

std::vector<ValidationIssue> validate_corpus(const std::vector<Question>& questions) {
    std::vector<ValidationIssue> issues;
    std::set<std::string> seen_ids;
    for (const auto& q : questions) {
        if (q.id.empty()) {
            issues.push_back({q.id, ValidationRule::EmptyId, "question has empty id"});
        } else if (!seen_ids.insert(q.id).second) {
            issues.push_back({q.id, ValidationRule::DuplicateId,
                              "id appears more than once in the corpus"});
        }
        if (util::trim(q.text).empty()) {
            issues.push_back({q.id, ValidationRule::EmptyText, "question text is empty"});
        }
        std::set<std::string> labels;
        for (const auto& choice : q.choices) {
            if (choice.label.empty()) {
                issues.push_back({q.id, ValidationRule::EmptyChoiceLabel,
                                  "choice with empty label"});
            } else if (!labels.insert(choice.label).second) {
                issues.push_back({q.id, ValidationRule::DuplicateChoiceLabel,
                                  "duplicate choice label '" + choice.label + "'"});
            }
        }
    }
    return issues;
}

} // namespace uqdiag
