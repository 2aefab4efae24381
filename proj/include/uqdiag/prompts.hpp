#pragma once
// Default prompt templates. All of them are overridable from plain-text files;
// placeholders use {name} syntax (see util::render_template).

namespace uqdiag::prompts {

// Attribution of uncertainty from N disagreeing answers. Third-person framing
// ("Tom") keeps the auxiliary model from judging its own output.
// Placeholders: {question}, {answers}, {n}.
inline constexpr const char* kAttribution = R"(Tom was asked the same question {n} times and gave the answers listed below. The answers do not all agree.

Question:
{question}

Tom's answers:
{answers}

Analyze why Tom's answers disagree, then decide which of these three causes best explains the disagreement:
- Question Ambiguity: the question is unclear or under-specified, so it allows more than one reasonable interpretation.
- Knowledge Gaps: Tom is missing or misapplying a specific fact or concept that the question requires.
- Both: the question is ambiguous and Tom is missing a needed fact or concept.

Briefly explain your reasoning, then end with one line in exactly this form:
Verdict: <Question Ambiguity | Knowledge Gaps | Both>)";

// Extraction of the specific missing fact or concept.
// Placeholders: {question}, {answers}, {n}.
inline constexpr const char* kExtraction = R"(Tom was asked the same question {n} times and gave the answers listed below. The answers disagree because Tom is missing some piece of knowledge.

Question:
{question}

Tom's answers:
{answers}

Step 1 - Difference analysis: summarize the key differences between the answers and what each one assumes.
Step 2 - Missing knowledge: identify the single most specific fact or concept that, if Tom knew it, would resolve the disagreement.

End with exactly one line in this form:
Missing Knowledge: <concise statement of the missing fact or concept>)";

// Standalone knowledge snippet for a concept, used when no retrieval backend
// is available. Placeholder: {concept}.
inline constexpr const char* kSynthesis = R"(Write a self-contained explanatory note about the following concept:

{concept}

The note must contain a clear definition, a short explanation of how it works or why it matters, and any key formulas or conditions stated plainly. Keep it under 200 words and make it readable on its own, so it can be placed in front of any question as background context. Output only the note.)";

// Question clarification. Placeholder: {question}.
inline constexpr const char* kClarification = R"(Rewrite the question below so that it has exactly one reasonable interpretation. Resolve real-world ambiguities such as unspecified timeframes, locations, or referents by adding succinct, factual qualifiers. Do not change what the question is fundamentally asking, do not hint at any particular answer, and do not answer it. If the question is already unambiguous, repeat it unchanged.

Question:
{question}

Output only the rewritten question.)";

// Verbalized confidence for a single answer.
// Placeholders: {question}, {answer}.
inline constexpr const char* kVerbalization = R"(Question: "{question}"
Answer: "{answer}"
Provide the reasoning correctness probability for the answer as a number between 0 and 1.)";

// Suffix appended as a follow-up turn when an attribution reply contains none
// of the three labels.
inline constexpr const char* kLabelReask =
    "Your previous reply did not contain a verdict. Answer again and end with one line in "
    "exactly this form:\nVerdict: <Question Ambiguity | Knowledge Gaps | Both>";

} // namespace uqdiag::prompts
