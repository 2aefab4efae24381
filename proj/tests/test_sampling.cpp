#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "uqdiag/sampling.hpp"

using namespace uqdiag;

namespace {

Question mc_question(const std::string& id = "q1") {
    Question q;
    q.id = id;
    q.text = "Which option is right?";
    q.choices = {{"A", "first"}, {"B", "second"}, {"C", "third"}, {"D", "fourth"}};
    q.gold_answer = "B";
    return q;
}

ScriptedResponse text_response(const std::string& text) {
    ScriptedResponse r;
    r.text = text;
    return r;
}

} // namespace

TEST_CASE("normalize_answer applies the configured flags") {
    Normalization norm;
    CHECK(normalize_answer("  The  Eiffel   Tower. ", norm) == "eiffel tower");
    CHECK(normalize_answer("An apple", norm) == "apple");
    CHECK(normalize_answer("\"Paris!\"", norm) == "paris");

    Normalization keep_case;
    keep_case.lowercase = false;
    CHECK(normalize_answer("The Eiffel Tower", keep_case) == "Eiffel Tower");

    Normalization keep_articles;
    keep_articles.strip_articles = false;
    CHECK(normalize_answer("the tower", keep_articles) == "the tower");
}

TEST_CASE("extract_final_answer: multiple-choice letters") {
    Question q = mc_question();
    Normalization norm;
    auto extract = [&](const std::string& raw) {
        return extract_final_answer(raw, ExtractionMode::MultipleChoiceLetter, q, norm);
    };

    CHECK(extract("Thinking...\nAnswer: B") == "B");
    CHECK(extract("The final answer is (C).") == "C");
    CHECK(extract("I would pick b) here") == "B");
    CHECK(extract("Options A and B look plausible.\nAnswer: D") == "D");
    // marker text wins over earlier stray letters
    CHECK(extract("Could be A. Could be C. Final answer: A") == "A");
    // last standalone letter when there is no marker
    CHECK(extract("Definitely not A. I believe it is C") == "C");
    // the article "a" is not option A
    CHECK(extract("the answer is a mystery to me") == kUnparsedAnswer);
    CHECK(extract("I cannot decide.") == kUnparsedAnswer);
    CHECK(extract("") == kUnparsedAnswer);
    // letters outside the choice set do not count
    CHECK(extract("Answer: Z") == kUnparsedAnswer);
}

TEST_CASE("extract_final_answer: marker mode and full-text mode") {
    Question q;
    q.id = "open1";
    q.text = "Name the capital of France.";
    Normalization norm;

    CHECK(extract_final_answer("Let me think.\nFinal answer: The Paris",
                               ExtractionMode::FinalAnswerMarker, q, norm) == "paris");
    CHECK(extract_final_answer("Reasoning here.\nParis.",
                               ExtractionMode::FinalAnswerMarker, q, norm) == "paris");
    CHECK(extract_final_answer("  The Eiffel Tower.  ",
                               ExtractionMode::FullTextNormalized, q, norm) == "eiffel tower");
    CHECK(extract_final_answer("\n \n", ExtractionMode::FinalAnswerMarker, q, norm) ==
          kUnparsedAnswer);
}

TEST_CASE("extraction is deterministic") {
    Question q = mc_question();
    Normalization norm;
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> len(0, 60);
    std::uniform_int_distribution<int> chr(32, 126);
    for (int i = 0; i < 200; ++i) {
        std::string raw;
        int n = len(rng);
        for (int c = 0; c < n; ++c) raw.push_back(static_cast<char>(chr(rng)));
        std::string first =
            extract_final_answer(raw, ExtractionMode::MultipleChoiceLetter, q, norm);
        std::string second =
            extract_final_answer(raw, ExtractionMode::MultipleChoiceLetter, q, norm);
        CHECK(first == second);
    }
}

TEST_CASE("build_distribution: symmetric split gives ln 2") {
    auto samples = oracles::samples_from_counts({5, 5}, "q1");
    AnswerDistribution dist = build_distribution(samples);
    CHECK(dist.n_samples == 10);
    CHECK(dist.entropy == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(dist.majority_confidence == 0.5);
    // tie: earliest-sampled cluster wins
    CHECK(dist.majority_answer == "ans0");
}

TEST_CASE("build_distribution: degenerate distribution") {
    auto samples = oracles::samples_from_counts({10}, "q1");
    AnswerDistribution dist = build_distribution(samples);
    CHECK(dist.entropy == 0.0);
    CHECK(dist.majority_confidence == 1.0);
    CHECK(dist.clusters.size() == 1);
}

TEST_CASE("build_distribution: 7/3 split matches the direct-summation oracle") {
    auto samples = oracles::samples_from_counts({7, 3}, "q1");
    AnswerDistribution dist = build_distribution(samples);
    // frozen from the oracle: -(0.7 ln 0.7 + 0.3 ln 0.3)
    CHECK(dist.entropy == doctest::Approx(0.6108643020548935).epsilon(1e-12));
    CHECK(std::fabs(dist.entropy - oracles::entropy_direct({7, 3})) < 1e-12);
}

TEST_CASE("build_distribution: 6/3/1 split crosses the 0.89 threshold") {
    auto samples = oracles::samples_from_counts({6, 3, 1}, "q1");
    AnswerDistribution dist = build_distribution(samples);
    CHECK(dist.entropy == doctest::Approx(0.8979457248567799).epsilon(1e-12));
    CHECK(std::fabs(dist.entropy - oracles::entropy_direct({6, 3, 1})) < 1e-12);
    CHECK(dist.entropy > 0.89);
}

TEST_CASE("build_distribution: mixed question ids and empty input are rejected") {
    auto samples = oracles::samples_from_counts({2, 2}, "q1");
    samples[2].question_id = "q2";
    CHECK(oracles::thrown_code([&] { build_distribution(samples); }) ==
          ErrorCode::MixedQuestionIds);
    CHECK(oracles::thrown_code([] { build_distribution({}); }) == ErrorCode::Precondition);
}

TEST_CASE("distribution invariants hold on random inputs") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 300; ++trial) {
        auto counts = oracles::random_counts(rng, 10, 100);
        auto samples = oracles::samples_from_counts(counts, "q");
        AnswerDistribution dist = build_distribution(samples);

        long long total = 0;
        double prob_sum = 0.0;
        for (const auto& c : dist.clusters) {
            total += c.count;
            prob_sum += c.probability;
        }
        CHECK(total == dist.n_samples);
        CHECK(std::fabs(prob_sum - 1.0) < 1e-9);
        CHECK(dist.entropy >= 0.0);
        CHECK(dist.entropy <=
              std::log(static_cast<double>(dist.n_samples)) + 1e-12);
        // matches the oracle on every draw
        CHECK(std::fabs(dist.entropy - oracles::entropy_direct(counts)) < 1e-12);
    }
}

TEST_CASE("entropy: permutation invariance and exact boundaries") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        auto counts = oracles::random_counts(rng, 8, 60);
        double before = shannon_entropy(counts);
        std::shuffle(counts.begin(), counts.end(), rng);
        // summation order may differ at the last ulp
        CHECK(std::fabs(shannon_entropy(counts) - before) < 1e-12);
    }
    for (int k = 1; k <= 10; ++k) {
        // uniform counts: exactly log(K)
        std::vector<int> uniform(static_cast<std::size_t>(k), 7);
        CHECK(shannon_entropy(uniform) == std::log(static_cast<double>(k)));
        // one cluster: exactly zero
        CHECK(shannon_entropy({k * 13}) == 0.0);
    }
}

TEST_CASE("entropy: uniform is the maximum, non-uniform is strictly below ln K") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        auto counts = oracles::random_counts(rng, 10, 80);
        double h = shannon_entropy(counts);
        double ln_k = std::log(static_cast<double>(counts.size()));
        CHECK(h <= ln_k + 1e-12);
        bool uniform = std::all_of(counts.begin(), counts.end(),
                                   [&](int c) { return c == counts[0]; });
        if (uniform) {
            CHECK(h == ln_k);
        } else {
            CHECK(h < ln_k);
        }
    }
}

TEST_CASE("entropy: merging clusters lowers it, splitting raises it") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        auto counts = oracles::random_counts(rng, 9, 80);
        double h = shannon_entropy(counts);

        if (counts.size() >= 2) {
            std::vector<int> merged(counts.begin() + 1, counts.end());
            merged[0] += counts[0];
            CHECK(shannon_entropy(merged) <= h + 1e-12);
        }
        // splitting one cluster into two equal halves strictly increases H
        std::vector<int> split = counts;
        split[0] *= 2;   // make it even
        double h_unsplit = shannon_entropy(split);
        std::vector<int> halves = split;
        halves[0] /= 2;
        halves.push_back(split[0] / 2);
        CHECK(shannon_entropy(halves) > h_unsplit);
    }
}

TEST_CASE("entropy: configurable log base") {
    CHECK(shannon_entropy({5, 5}, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(shannon_entropy({1, 1, 1, 1, 1, 1, 1, 1, 1, 1}, 10.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("self-consistency confidence is the majority fraction") {
    CHECK(self_consistency_confidence(build_distribution(
              oracles::samples_from_counts({7, 3}, "q"))) == doctest::Approx(0.7));
    CHECK(self_consistency_confidence(build_distribution(
              oracles::samples_from_counts({5, 5}, "q"))) == doctest::Approx(0.5));
    CHECK(self_consistency_confidence(build_distribution(
              oracles::samples_from_counts({10}, "q"))) == doctest::Approx(1.0));
}

TEST_CASE("two-cluster distributions: higher majority fraction means lower entropy") {
    double last = std::log(2.0) + 1e-9;
    for (int f = 50; f < 100; f += 5) {
        double h = shannon_entropy({f, 100 - f});
        CHECK(h < last);
        last = h;
    }
}

TEST_CASE("parse_confidence handles the documented forms") {
    CHECK(parse_confidence("0.9") == 0.9);
    CHECK(parse_confidence("I am 85% certain") == 0.85);
    CHECK(parse_confidence("around 85 percent") == 0.85);
    CHECK(parse_confidence("confidence: .75") == 0.75);
    CHECK(parse_confidence("100% sure") == 1.0);
    CHECK(!parse_confidence("quite sure").has_value());
    CHECK(!parse_confidence("").has_value());
}

TEST_CASE("verbalized_confidence issues one call per answer and parses the reply") {
    Question q = mc_question();
    auto answer_at = [&](int index) {
        AnswerSample answer;
        answer.question_id = q.id;
        answer.sample_index = index;
        answer.raw_text = "Answer: B";
        return answer;
    };

    std::map<std::string, std::vector<ScriptedResponse>> fx;
    fx["q1#verb"] = {text_response("0.9"), text_response("I am 85% certain"),
                     text_response("quite sure")};
    ScriptedBackend backend(std::move(fx));

    CHECK(verbalized_confidence(q, answer_at(0), "aux", backend) == 0.9);
    CHECK(verbalized_confidence(q, answer_at(1), "aux", backend) == 0.85);
    CHECK(oracles::thrown_code(
              [&] { verbalized_confidence(q, answer_at(2), "aux", backend); }) ==
          ErrorCode::ConfidenceUnparseable);

    AnswerSample stranger = answer_at(0);
    stranger.question_id = "other";
    CHECK(oracles::thrown_code([&] { verbalized_confidence(q, stranger, "aux", backend); }) ==
          ErrorCode::Precondition);
}

TEST_CASE("perplexity_confidence: geometric mean with exact single-token identity") {
    CHECK(perplexity_confidence({0.5, 0.5}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(perplexity_confidence({1.0, 1.0, 1.0}) == 1.0);
    // frozen from direct computation: exp((ln 0.25 + ln 1)/2)
    CHECK(perplexity_confidence({0.25, 1.0}) == doctest::Approx(0.5).epsilon(1e-15));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(1e-9, 1.0);
    for (int i = 0; i < 100; ++i) {
        double x = unit(rng);
        CHECK(perplexity_confidence({x}) == x);
    }

    CHECK(oracles::thrown_code([] { perplexity_confidence({}); }) ==
          ErrorCode::EmptyLikelihoods);
    CHECK(oracles::thrown_code([] { perplexity_confidence({0.5, 0.0}); }) ==
          ErrorCode::OutOfRangeLikelihood);
    CHECK(oracles::thrown_code([] { perplexity_confidence({0.5, 1.5}); }) ==
          ErrorCode::OutOfRangeLikelihood);
}

TEST_CASE("sample_answers: split fixture yields the scripted clusters") {
    Question q = mc_question("qx");
    SamplingConfig config;
    config.model = "target";

    std::map<std::string, std::vector<ScriptedResponse>> fx;
    std::vector<ScriptedResponse> responses;
    for (int i = 0; i < 5; ++i) responses.push_back(text_response("Answer: B"));
    for (int i = 0; i < 5; ++i) responses.push_back(text_response("Answer: D"));
    fx["qx#sample"] = responses;
    ScriptedBackend backend(std::move(fx));

    auto samples = sample_answers(q, config, backend);
    REQUIRE(samples.size() == 10);
    int b = 0, d = 0;
    for (const auto& s : samples) {
        if (s.extracted_answer == "B") ++b;
        if (s.extracted_answer == "D") ++d;
    }
    CHECK(b == 5);
    CHECK(d == 5);
    for (int i = 0; i < 10; ++i) CHECK(samples[static_cast<std::size_t>(i)].sample_index == i);

    AnswerDistribution dist = build_distribution(samples);
    CHECK(dist.entropy == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(dist.majority_confidence == 0.5);
}

TEST_CASE("sample_answers: identical responses collapse to one cluster") {
    Question q = mc_question("qy");
    SamplingConfig config;
    config.model = "target";
    std::map<std::string, std::vector<ScriptedResponse>> fx;
    fx["qy"] = std::vector<ScriptedResponse>(10, text_response("Answer: A"));
    ScriptedBackend backend(std::move(fx));

    auto dist = build_distribution(sample_answers(q, config, backend));
    CHECK(dist.clusters.size() == 1);
    CHECK(dist.entropy == 0.0);
}

TEST_CASE("sample_answers: unparseable responses land in the UNPARSED cluster") {
    Question q = mc_question("qz");
    SamplingConfig config;
    config.model = "target";
    std::map<std::string, std::vector<ScriptedResponse>> fx;
    std::vector<ScriptedResponse> responses(9, text_response("Answer: A"));
    responses.push_back(text_response("no idea at all"));
    fx["qz#sample"] = responses;
    ScriptedBackend backend(std::move(fx));

    auto samples = sample_answers(q, config, backend);
    REQUIRE(samples.size() == 10);
    AnswerDistribution dist = build_distribution(samples);
    REQUIRE(dist.clusters.size() == 2);
    CHECK(dist.clusters[1].answer == kUnparsedAnswer);
    CHECK(dist.clusters[1].count == 1);
    CHECK(dist.n_samples == 10);
}

TEST_CASE("sample_answers: invalid n_samples is rejected") {
    Question q = mc_question();
    SamplingConfig config;
    config.n_samples = 1;
    ScriptedBackend backend{std::map<std::string, std::vector<ScriptedResponse>>{}};
    CHECK(oracles::thrown_code([&] { sample_answers(q, config, backend); }) ==
          ErrorCode::InvalidConfig);
}
