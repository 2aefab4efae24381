#pragma once
// Sampling and uncertainty estimation: draw N answers per question, extract
// canonical final answers, build the empirical answer distribution, and
// compute the three confidence measures (self-consistency, verbalization,
// perplexity).

#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "gateway.hpp"

namespace uqdiag {

enum class ExtractionMode {
    MultipleChoiceLetter,
    FinalAnswerMarker,
    FullTextNormalized,
};

const char* to_string(ExtractionMode mode);
std::optional<ExtractionMode> extraction_mode_from_string(const std::string& name);

struct Normalization {
    bool lowercase = true;
    bool strip_punctuation = true;   // leading/trailing punctuation
    bool strip_articles = true;      // leading "a"/"an"/"the"
};

struct SamplingConfig {
    int n_samples = 10;              // N; must be >= 2
    ExtractionMode extraction_mode = ExtractionMode::MultipleChoiceLetter;
    Normalization normalization;
    std::string model;
    double temperature = 1.0;        // independent sampling needs > 0
    int max_tokens = 1024;
};

// Canonical form used for answer equality: collapse whitespace, then apply
// the configured flags. Deterministic: equal raw text always canonicalizes
// equally.
std::string normalize_answer(std::string_view text, const Normalization& norm);

// Final-answer extraction. Tries, in order: an explicit marker line
// ("Final answer:", "Answer:", last occurrence wins), then for
// multiple-choice the last standalone option letter, then the last non-empty
// line. Returns kUnparsedAnswer when nothing matches; unparsed samples keep
// their slot so N never silently shrinks.
std::string extract_final_answer(const std::string& raw_text, ExtractionMode mode,
                                 const Question& question, const Normalization& norm);

// Builds the user prompt for one question; `context` (when present) is
// prepended under a "Context:" header before the question body.
std::string render_question_prompt(const Question& question,
                                   const std::optional<std::string>& context = std::nullopt);

// Draws exactly N samples with request tags "<id>#<stage>#<index>". The
// samples come back ordered by sample_index regardless of backend behavior.
std::vector<AnswerSample> sample_answers(const Question& question,
                                         const SamplingConfig& config, Backend& backend,
                                         const std::optional<std::string>& context = std::nullopt,
                                         const std::string& stage = "sample");

// Shannon entropy of a count vector, natural log by default. `log_base` <= 0
// means nats. Exact at the boundaries: one cluster gives 0, equal counts give
// log(K) with no summation error.
double shannon_entropy(const std::vector<int>& counts, double log_base = 0.0);

// Clusters samples by canonical answer (first-occurrence order), computes
// probabilities count/N and the entropy in nats. Majority ties break toward
// the earliest-sampled cluster. Throws MixedQuestionIds when the samples span
// questions and Precondition when empty.
AnswerDistribution build_distribution(const std::vector<AnswerSample>& samples);

// Relative frequency of the majority answer, f*/n.
double self_consistency_confidence(const AnswerDistribution& dist);

// Asks the model for its reasoning-correctness probability and parses the
// first number in [0,1] from the reply ("85%" reads as 0.85).
double verbalized_confidence(const Question& question, const AnswerSample& answer,
                             const std::string& model, Backend& backend);

// Parses a confidence value from free text; shared by verbalized_confidence
// and exposed for tests. Empty optional means unparseable.
std::optional<double> parse_confidence(const std::string& reply);

// Geometric-mean token confidence: exp(mean(ln l_i)). All l_i must lie in
// (0,1]; a single value returns exactly that value.
double perplexity_confidence(const std::vector<double>& token_likelihoods);

} // namespace uqdiag
