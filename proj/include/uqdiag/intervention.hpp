#pragma once
// Validation interventions: (a) clarify a question and re-sample, (b) acquire
// the missing knowledge (retrieval or prompt synthesis), inject it as context
// and re-sample. Produces per-question results plus the aggregated
// before/after study tables.

#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "diagnosis.hpp"
#include "gateway.hpp"
#include "sampling.hpp"

namespace uqdiag {

enum class KnowledgeSource {
    WebSearch,
    PromptSynthesis,
};

const char* to_string(KnowledgeSource source);
std::optional<KnowledgeSource> knowledge_source_from_string(const std::string& name);

// How acquired knowledge is combined with the question. Only one layout is
// implemented; the enum keeps the injection surface explicit.
enum class InjectionLayout {
    PrependContext,
};

struct InterventionConfig {
    std::string clarification_prompt_template;  // needs {question}
    std::string synthesis_prompt_template;      // needs {concept}
    KnowledgeSource knowledge_source = KnowledgeSource::WebSearch;
    InjectionLayout injection_layout = InjectionLayout::PrependContext;
    bool fall_back_to_synthesis = true;         // on SearchUnavailable
    int passage_char_budget = 2000;             // long passages dilute focus
    std::string auxiliary_model;
    int max_tokens = 1024;

    InterventionConfig();                       // fills in default templates
    void validate() const;
};

// Rewrites the question to remove ambiguity; the id is kept and the revision
// marker set even when the text comes back unchanged. Empty question text is
// a precondition error.
Question clarify_question(const Question& question, const InterventionConfig& config,
                          Backend& backend);

// Fetches or synthesizes an explanatory passage for a missing-knowledge
// phrase, truncated to the passage budget.
std::string acquire_knowledge(const std::string& gap, const InterventionConfig& config,
                              Backend& backend, SearchProvider& search);

// Samples N answers with the passage prepended as context and returns the new
// distribution plus majority-vote correctness (absent without a gold answer).
struct EvalOutcome {
    AnswerDistribution distribution;
    std::optional<double> majority_correct;   // 1.0 or 0.0
    std::optional<double> sample_accuracy;    // fraction of samples matching gold
};

EvalOutcome inject_and_reevaluate(const Question& question, const std::string& context,
                                  const SamplingConfig& sampling, Backend& backend,
                                  const std::string& stage = "inject-sample");

// Majority-vote correctness of a distribution against the question's gold
// answer (and aliases); absent when there is no gold.
std::optional<double> majority_correct(const AnswerDistribution& dist, const Question& question,
                                       const Normalization& norm);

struct Measurement {
    double uncertainty = 0.0;
    std::optional<double> accuracy;   // fraction in [0,1]
};

// Fills the rate fields from a before/after pair:
//   unc_reduction_rate   = 100*(before-after)/before, 0 when before == 0
//   acc_improvement_rate = 100*(after-before) percentage points
InterventionResult reduction_metrics(const Measurement& before, const Measurement& after);

// One aggregate row (per label for the clarification study, one overall row
// for the injection study). Rates are recomputed from the rounded means that
// the tables print, so an emitted table is internally consistent.
struct StudyRow {
    std::optional<DiagnosisLabel> label;   // absent for the overall row
    int n = 0;
    double unc_before = 0.0;               // means over the group
    double unc_after = 0.0;
    std::optional<double> acc_before;      // mean majority-vote accuracy
    std::optional<double> acc_after;
    double unc_reduction_rate = 0.0;
    std::optional<double> acc_improvement_rate;
};

struct StudyReport {
    InterventionKind kind = InterventionKind::Clarification;
    std::vector<StudyRow> rows;
    std::vector<InterventionResult> per_question;
    int skipped_failed_diagnoses = 0;   // flagged questions excluded for parse failures
};

// Aggregates per-question results into rows; clarification groups by label in
// the fixed order QuestionAmbiguity, Both, KnowledgeGaps (empty groups are
// dropped), injection emits a single overall row.
StudyReport aggregate_study(InterventionKind kind,
                            std::vector<InterventionResult> per_question,
                            int skipped_failed_diagnoses);

// Clarifies every flagged, successfully diagnosed question, re-samples and
// aggregates by label. `dists` must hold the pre-intervention distributions.
StudyReport run_clarification_study(const std::vector<Question>& corpus,
                                    const std::vector<AnswerDistribution>& dists,
                                    const std::vector<DiagnosisOutcome>& diagnoses,
                                    const SamplingConfig& sampling,
                                    const InterventionConfig& config, Backend& backend);

// Acquires and injects knowledge for every KnowledgeGaps/Both record, then
// re-samples. Questions labeled QuestionAmbiguity are not touched.
StudyReport run_injection_study(const std::vector<Question>& corpus,
                                const std::vector<AnswerDistribution>& dists,
                                const std::vector<DiagnosisOutcome>& diagnoses,
                                const SamplingConfig& sampling,
                                const InterventionConfig& config, Backend& backend,
                                SearchProvider& search);

} // namespace uqdiag
