#include <doctest.h>

#include "uqdiag/core.hpp"

using namespace uqdiag;

namespace {

Question make_question(const std::string& id, const std::string& text = "What is it?") {
    Question q;
    q.id = id;
    q.text = text;
    q.dataset_tag = "test";
    return q;
}

int count_rule(const std::vector<ValidationIssue>& issues, ValidationRule rule) {
    int n = 0;
    for (const auto& issue : issues) {
        if (issue.rule == rule) ++n;
    }
    return n;
}

} // namespace

TEST_CASE("validate_corpus: empty corpus has no issues") {
    CHECK(validate_corpus({}).empty());
}

TEST_CASE("validate_corpus: duplicate ids produce one issue") {
    auto issues = validate_corpus({make_question("q1"), make_question("q1")});
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].rule == ValidationRule::DuplicateId);
    CHECK(issues[0].question_id == "q1");
}

TEST_CASE("validate_corpus: duplicate choice labels produce one issue") {
    Question q = make_question("q1");
    q.choices = {{"A", "first"}, {"A", "second"}};
    auto issues = validate_corpus({q});
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].rule == ValidationRule::DuplicateChoiceLabel);
}

TEST_CASE("validate_corpus: empty labels, ids and texts are each reported") {
    Question q = make_question("q1");
    q.choices = {{"", "first"}, {"B", "second"}};
    Question empty_id = make_question("", "fine text");
    Question empty_text = make_question("q2", "   ");
    auto issues = validate_corpus({q, empty_id, empty_text});
    CHECK(count_rule(issues, ValidationRule::EmptyChoiceLabel) == 1);
    CHECK(count_rule(issues, ValidationRule::EmptyId) == 1);
    CHECK(count_rule(issues, ValidationRule::EmptyText) == 1);
}

TEST_CASE("validate_corpus: clean corpus passes") {
    Question a = make_question("a");
    a.choices = {{"A", "x"}, {"B", "y"}};
    Question b = make_question("b");
    CHECK(validate_corpus({a, b}).empty());
}

TEST_CASE("enum round trips") {
    for (auto label : {DiagnosisLabel::QuestionAmbiguity, DiagnosisLabel::KnowledgeGaps,
                       DiagnosisLabel::Both}) {
        CHECK(diagnosis_label_from_string(to_string(label)) == label);
    }
    for (auto method : {ConfidenceMethod::Verbalization, ConfidenceMethod::Perplexity,
                        ConfidenceMethod::SelfConsistency}) {
        CHECK(confidence_method_from_string(to_string(method)) == method);
    }
    for (auto kind : {InterventionKind::Clarification, InterventionKind::KnowledgeInjection}) {
        CHECK(intervention_kind_from_string(to_string(kind)) == kind);
    }
    CHECK(confidence_method_from_string("SC") == ConfidenceMethod::SelfConsistency);
    CHECK(confidence_method_from_string("VERB") == ConfidenceMethod::Verbalization);
    CHECK(confidence_method_from_string("PPL") == ConfidenceMethod::Perplexity);
    CHECK(!confidence_method_from_string("nope").has_value());
}
