#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "uqdiag/diagnosis.hpp"
#include "uqdiag/run_store.hpp"
#include "uqdiag/sampling.hpp"

using namespace uqdiag;

namespace {

Question mc_question(const std::string& id) {
    Question q;
    q.id = id;
    q.text = "Question " + id + "?";
    q.choices = {{"A", "one"}, {"B", "two"}, {"C", "three"}, {"D", "four"}};
    return q;
}

ScriptedResponse text_response(const std::string& text) {
    ScriptedResponse r;
    r.text = text;
    return r;
}

AnswerDistribution dist_with_entropy(const std::string& id, double entropy) {
    AnswerDistribution d;
    d.question_id = id;
    d.n_samples = 10;
    d.entropy = entropy;
    d.majority_answer = "A";
    d.majority_confidence = 0.5;
    d.clusters = {{"A", 5, 0.5}, {"B", 5, 0.5}};
    return d;
}

DiagnosisConfig test_config() {
    DiagnosisConfig config;
    config.auxiliary_model = "aux";
    return config;
}

} // namespace

TEST_CASE("filter_high_uncertainty: strict inequality at the boundary") {
    std::vector<AnswerDistribution> dists = {dist_with_entropy("a", 0.0),
                                             dist_with_entropy("b", 0.90),
                                             dist_with_entropy("c", 0.89)};
    auto flagged = filter_high_uncertainty(dists, 0.89);
    REQUIRE(flagged.size() == 1);
    CHECK(flagged[0] == "b");
}

TEST_CASE("filter_high_uncertainty: zero entropies flag nothing") {
    std::vector<AnswerDistribution> dists = {dist_with_entropy("a", 0.0),
                                             dist_with_entropy("b", 0.0)};
    CHECK(filter_high_uncertainty(dists, 0.89).empty());
}

TEST_CASE("filter_high_uncertainty: 6/3/1 split is included at tau 0.89") {
    auto dist = build_distribution(oracles::samples_from_counts({6, 3, 1}, "x"));
    CHECK(std::fabs(dist.entropy - oracles::entropy_direct({6, 3, 1})) < 1e-12);
    auto flagged = filter_high_uncertainty({dist}, 0.89);
    REQUIRE(flagged.size() == 1);
    CHECK(flagged[0] == "x");
}

TEST_CASE("parse_diagnosis_label: earliest match wins, 'both' never shadowed") {
    CHECK(parse_diagnosis_label("the source is Question Ambiguity because 'in 1920' admits "
                                "two readings") == DiagnosisLabel::QuestionAmbiguity);
    CHECK(parse_diagnosis_label("Both: the question is vague and a fact is missing") ==
          DiagnosisLabel::Both);
    CHECK(parse_diagnosis_label("clearly a knowledge gap in chemistry") ==
          DiagnosisLabel::KnowledgeGaps);
    CHECK(parse_diagnosis_label("Knowledge Gaps, not question ambiguity") ==
          DiagnosisLabel::KnowledgeGaps);
    CHECK(parse_diagnosis_label("both question ambiguity and knowledge gaps apply") ==
          DiagnosisLabel::Both);
    // word-boundary: "both" inside another word does not count
    CHECK(parse_diagnosis_label("this is bothersome; question ambiguity it is") ==
          DiagnosisLabel::QuestionAmbiguity);
    CHECK(!parse_diagnosis_label("unclear").has_value());
    CHECK(!parse_diagnosis_label("").has_value());
}

TEST_CASE("render_answer_block: numbered in sampling order, budget applied") {
    auto samples = oracles::samples_from_counts({2, 1}, "q");
    samples[0].raw_text = "first answer text";
    samples[1].raw_text = "second answer text";
    samples[2].raw_text = "third answer text";
    std::string block = render_answer_block(samples, 0);
    CHECK(block == "Answer 1: first answer text\nAnswer 2: second answer text\nAnswer 3: "
                   "third answer text");

    // permuting the samples only renumbers: content set is unchanged
    std::vector<AnswerSample> shuffled = {samples[2], samples[0], samples[1]};
    CHECK(render_answer_block(shuffled, 0) == block);

    std::string truncated = render_answer_block(samples, 5);
    CHECK(truncated == "Answer 1: first\nAnswer 2: secon\nAnswer 3: third");
}

TEST_CASE("attribute_uncertainty: parses the label and keeps the rationale") {
    Question q = mc_question("q1");
    auto samples = oracles::samples_from_counts({5, 5}, "q1");
    std::map<std::string, std::vector<ScriptedResponse>> fx;
    fx["q1#attr"] = {text_response("...the source is Question Ambiguity because 'in 1920' "
                                   "admits two readings")};
    ScriptedBackend backend(std::move(fx));

    DiagnosisRecord record = attribute_uncertainty(q, samples, test_config(), backend);
    CHECK(record.label == DiagnosisLabel::QuestionAmbiguity);
    CHECK(record.question_id == "q1");
    CHECK(record.rationale.find("two readings") != std::string::npos);
    CHECK(!record.knowledge_gap.has_value());
    CHECK(record.auxiliary_model == "aux");
}

TEST_CASE("attribute_uncertainty: direct Both parse") {
    Question q = mc_question("q1");
    auto samples = oracles::samples_from_counts({5, 5}, "q1");
    std::map<std::string, std::vector<ScriptedResponse>> fx;
    fx["q1#attr"] = {text_response("Both: the question is vague and a fact is missing")};
    ScriptedBackend backend(std::move(fx));
    CHECK(attribute_uncertainty(q, samples, test_config(), backend).label ==
          DiagnosisLabel::Both);
}

TEST_CASE("attribute_uncertainty: retry exhaustion raises LabelUnparseable") {
    Question q = mc_question("q1");
    auto samples = oracles::samples_from_counts({5, 5}, "q1");
    std::map<std::string, std::vector<ScriptedResponse>> fx;
    fx["q1#attr"] = {text_response("unclear"), text_response("unclear"),
                     text_response("unclear")};
    auto backend = std::make_shared<ScriptedBackend>(std::move(fx));

    DiagnosisConfig config = test_config();
    CHECK(config.max_label_retries == 2);
    CHECK(oracles::thrown_code(
              [&] { attribute_uncertainty(q, samples, config, *backend); }) ==
          ErrorCode::LabelUnparseable);
    CHECK(backend->call_count() == 3);   // initial attempt + two retries
}

TEST_CASE("attribute_uncertainty: a retry that recovers succeeds") {
    Question q = mc_question("q1");
    auto samples = oracles::samples_from_counts({5, 5}, "q1");
    std::map<std::string, std::vector<ScriptedResponse>> fx;
    fx["q1#attr"] = {text_response("no verdict here"),
                     text_response("Verdict: Knowledge Gaps")};
    auto backend = std::make_shared<ScriptedBackend>(std::move(fx));
    CHECK(attribute_uncertainty(q, samples, test_config(), *backend).label ==
          DiagnosisLabel::KnowledgeGaps);
    CHECK(backend->call_count() == 2);
}

TEST_CASE("extract_knowledge_gap: parses the delimited final line") {
    Question q = mc_question("q3");
    auto samples = oracles::samples_from_counts({5, 5}, "q3");

    std::map<std::string, std::vector<ScriptedResponse>> fx;
    fx["q3#extract"] = {
        text_response("Step 1: answers differ on what the battery holds.\nStep 2: the "
                      "conversion chain.\nMissing Knowledge: battery stores chemical "
                      "energy, converted to electrical"),
        text_response("Analysis of the acid-base answers...\nMissing Knowledge: "
                      "Stoichiometric Calculations in Acid-Base Reactions"),
        text_response("no delimited line at all")};
    ScriptedBackend backend(std::move(fx));

    auto first = extract_knowledge_gap(q, samples, test_config(), backend);
    CHECK(first.knowledge == "battery stores chemical energy, converted to electrical");
    CHECK(first.rationale.find("Step 1") != std::string::npos);

    auto second = extract_knowledge_gap(q, samples, test_config(), backend);
    CHECK(second.knowledge == "Stoichiometric Calculations in Acid-Base Reactions");

    CHECK(oracles::thrown_code(
              [&] { extract_knowledge_gap(q, samples, test_config(), backend); }) ==
          ErrorCode::ExtractionUnparseable);
}

namespace {

struct CorpusFixture {
    std::vector<Question> questions;
    std::vector<AnswerDistribution> dists;
    std::vector<std::vector<AnswerSample>> samples;

    void add(const std::string& id, const std::vector<int>& counts) {
        questions.push_back(mc_question(id));
        samples.push_back(oracles::samples_from_counts(counts, id));
        dists.push_back(build_distribution(samples.back()));
    }
};

} // namespace

TEST_CASE("diagnose_corpus: control flow over a three-question corpus") {
    CorpusFixture corpus;
    corpus.add("low", {10});              // entropy 0
    corpus.add("amb", {4, 3, 3});         // 1.0889
    corpus.add("gap", {5, 3, 2});         // 1.0297

    std::map<std::string, std::vector<ScriptedResponse>> fx;
    fx["amb#attr"] = {text_response("Verdict: Question Ambiguity")};
    fx["gap#attr"] = {text_response("Verdict: Knowledge Gaps")};
    fx["gap#extract"] = {text_response("Missing Knowledge: the relevant fact")};
    auto backend = std::make_shared<ScriptedBackend>(std::move(fx));

    auto outcomes =
        diagnose_corpus(corpus.questions, corpus.dists, corpus.samples, test_config(), *backend);
    REQUIRE(outcomes.size() == 2);
    CHECK(outcomes[0].question_id == "amb");
    CHECK(outcomes[1].question_id == "gap");
    REQUIRE(outcomes[0].ok());
    REQUIRE(outcomes[1].ok());
    CHECK(!outcomes[0].record->knowledge_gap.has_value());
    REQUIRE(outcomes[1].record->knowledge_gap.has_value());
    CHECK(*outcomes[1].record->knowledge_gap == "the relevant fact");

    // extraction ran exactly once, for the knowledge-gap question
    int extract_calls = 0;
    for (const auto& tag : backend->call_log()) {
        if (tag.find("#extract") != std::string::npos) ++extract_calls;
    }
    CHECK(extract_calls == 1);
}

TEST_CASE("diagnose_corpus: label Both triggers extraction") {
    CorpusFixture corpus;
    corpus.add("b1", {4, 3, 3});
    std::map<std::string, std::vector<ScriptedResponse>> fx;
    fx["b1#attr"] = {text_response("Verdict: Both")};
    fx["b1#extract"] = {text_response("Missing Knowledge: a key formula")};
    ScriptedBackend backend(std::move(fx));

    auto outcomes =
        diagnose_corpus(corpus.questions, corpus.dists, corpus.samples, test_config(), backend);
    REQUIRE(outcomes.size() == 1);
    REQUIRE(outcomes[0].ok());
    CHECK(outcomes[0].record->label == DiagnosisLabel::Both);
    CHECK(outcomes[0].record->knowledge_gap == "a key formula");
}

TEST_CASE("diagnose_corpus: one failing question does not abort the batch") {
    CorpusFixture corpus;
    corpus.add("bad", {4, 3, 3});
    corpus.add("good", {4, 3, 3});

    std::map<std::string, std::vector<ScriptedResponse>> fx;
    fx["bad#attr"] = {text_response("unclear"), text_response("unclear"),
                      text_response("unclear")};
    fx["good#attr"] = {text_response("Verdict: Question Ambiguity")};
    ScriptedBackend backend(std::move(fx));

    auto outcomes =
        diagnose_corpus(corpus.questions, corpus.dists, corpus.samples, test_config(), backend);
    REQUIRE(outcomes.size() == 2);
    CHECK(!outcomes[0].ok());
    CHECK(outcomes[0].error.find("LabelUnparseable") != std::string::npos);
    CHECK(outcomes[1].ok());
}

TEST_CASE("diagnose_corpus: label/knowledge coupling holds for every record") {
    CorpusFixture corpus;
    corpus.add("a", {4, 3, 3});
    corpus.add("b", {4, 3, 3});
    corpus.add("c", {4, 3, 3});
    std::map<std::string, std::vector<ScriptedResponse>> fx;
    fx["a#attr"] = {text_response("Verdict: Question Ambiguity")};
    fx["b#attr"] = {text_response("Verdict: Knowledge Gaps")};
    fx["b#extract"] = {text_response("Missing Knowledge: fact b")};
    fx["c#attr"] = {text_response("Verdict: Both")};
    fx["c#extract"] = {text_response("Missing Knowledge: fact c")};
    ScriptedBackend backend(std::move(fx));

    auto outcomes =
        diagnose_corpus(corpus.questions, corpus.dists, corpus.samples, test_config(), backend);
    for (const auto& outcome : outcomes) {
        REQUIRE(outcome.ok());
        bool needs_gap = outcome.record->label != DiagnosisLabel::QuestionAmbiguity;
        CHECK(outcome.record->knowledge_gap.has_value() == needs_gap);
    }
}

TEST_CASE("diagnose_corpus: deterministic byte-for-byte under replay") {
    auto run_once = [] {
        CorpusFixture corpus;
        corpus.add("a", {4, 3, 3});
        corpus.add("b", {4, 3, 3});
        std::map<std::string, std::vector<ScriptedResponse>> fx;
        fx["a#attr"] = {text_response("Verdict: Question Ambiguity")};
        fx["b#attr"] = {text_response("Verdict: Both")};
        fx["b#extract"] = {text_response("Missing Knowledge: fact b")};
        ScriptedBackend backend(std::move(fx));
        auto outcomes = diagnose_corpus(corpus.questions, corpus.dists, corpus.samples,
                                        test_config(), backend);
        std::string bytes;
        for (const auto& o : outcomes) bytes += to_json(o).dump() + "\n";
        return bytes;
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("diagnosis config validation") {
    DiagnosisConfig config = test_config();
    config.tau = 0.0;
    CHECK(oracles::thrown_code([&] { config.validate(); }) == ErrorCode::InvalidConfig);

    config = test_config();
    config.attribution_prompt_template = "no placeholders";
    CHECK(oracles::thrown_code([&] { config.validate(); }) == ErrorCode::InvalidConfig);

    config = test_config();
    CHECK_NOTHROW(config.validate());
}
