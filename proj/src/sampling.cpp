#include "uqdiag/sampling.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "uqdiag/errors.hpp"
#include "uqdiag/prompts.hpp"
#include "uqdiag/util.hpp"

namespace uqdiag {

const char* to_string(ExtractionMode mode) {
    switch (mode) {
        case ExtractionMode::MultipleChoiceLetter: return "multiple_choice_letter";
        case ExtractionMode::FinalAnswerMarker: return "final_answer_marker";
        case ExtractionMode::FullTextNormalized: return "full_text_normalized";
    }
    return "?";
}

std::optional<ExtractionMode> extraction_mode_from_string(const std::string& name) {
    std::string n = util::to_lower(name);
    if (n == "multiple_choice_letter" || n == "mc") return ExtractionMode::MultipleChoiceLetter;
    if (n == "final_answer_marker" || n == "marker") return ExtractionMode::FinalAnswerMarker;
    if (n == "full_text_normalized" || n == "full") return ExtractionMode::FullTextNormalized;
    return std::nullopt;
}

std::string normalize_answer(std::string_view text, const Normalization& norm) {
    std::string s = util::collapse_whitespace(text);
    if (norm.lowercase) s = util::to_lower(s);
    if (norm.strip_punctuation) {
        auto is_punct = [](char c) {
            return std::ispunct(static_cast<unsigned char>(c)) != 0;
        };
        std::size_t begin = 0, end = s.size();
        while (begin < end && is_punct(s[begin])) ++begin;
        while (end > begin && is_punct(s[end - 1])) --end;
        s = s.substr(begin, end - begin);
    }
    if (norm.strip_articles) {
        for (const char* article : {"a ", "an ", "the "}) {
            if (util::starts_with_ci(s, article)) {
                s = s.substr(std::string_view(article).size());
                break;
            }
        }
    }
    return util::trim(s);
}

namespace {

// Text after the last answer marker on its line, or empty when no marker.
std::string marker_text(const std::string& raw) {
    static const char* kMarkers[] = {"final answer is", "final answer:", "answer is",
                                     "answer:"};
    std::string lower = util::to_lower(raw);
    std::size_t best_pos = std::string::npos;
    std::size_t best_len = 0;
    for (const char* marker : kMarkers) {
        std::size_t len = std::string(marker).size();
        std::size_t pos = lower.rfind(marker);
        if (pos != std::string::npos &&
            (best_pos == std::string::npos || pos + len > best_pos + best_len)) {
            best_pos = pos;
            best_len = len;
        }
    }
    if (best_pos == std::string::npos) return "";
    std::size_t start = best_pos + best_len;
    std::size_t end = raw.find('\n', start);
    if (end == std::string::npos) end = raw.size();
    return util::trim(raw.substr(start, end - start));
}

std::string last_nonempty_line(const std::string& raw) {
    auto lines = util::split_lines(raw);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        std::string t = util::trim(*it);
        if (!t.empty()) return t;
    }
    return "";
}

// Last standalone option letter in the text. Uppercase letters count on word
// boundaries; lowercase only when followed by ')', '.' or ':' so the article
// "a" is never mistaken for option A.
std::string last_option_letter(const std::string& text, const Question& question) {
    std::string found;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (!std::isalpha(static_cast<unsigned char>(c))) continue;
        bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
        bool right_alnum = i + 1 < text.size() &&
                           std::isalnum(static_cast<unsigned char>(text[i + 1]));
        if (!left_ok || right_alnum) continue;
        char next = i + 1 < text.size() ? text[i + 1] : '\0';
        bool is_upper = std::isupper(static_cast<unsigned char>(c));
        bool marked = next == ')' || next == '.' || next == ':';
        if (!is_upper && !marked) continue;
        std::string label(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        for (const auto& choice : question.choices) {
            if (choice.label == label) {
                found = label;
                break;
            }
        }
    }
    return found;
}

} // namespace

std::string extract_final_answer(const std::string& raw_text, ExtractionMode mode,
                                 const Question& question, const Normalization& norm) {
    if (util::trim(raw_text).empty()) return kUnparsedAnswer;
    const std::string marked = marker_text(raw_text);

    switch (mode) {
        case ExtractionMode::MultipleChoiceLetter: {
            if (!marked.empty()) {
                std::string letter = last_option_letter(marked, question);
                if (!letter.empty()) return letter;
            }
            std::string letter = last_option_letter(raw_text, question);
            if (!letter.empty()) return letter;
            return kUnparsedAnswer;
        }
        case ExtractionMode::FinalAnswerMarker: {
            std::string candidate = !marked.empty() ? marked : last_nonempty_line(raw_text);
            std::string normalized = normalize_answer(candidate, norm);
            return normalized.empty() ? kUnparsedAnswer : normalized;
        }
        case ExtractionMode::FullTextNormalized: {
            std::string normalized = normalize_answer(raw_text, norm);
            return normalized.empty() ? kUnparsedAnswer : normalized;
        }
    }
    return kUnparsedAnswer;
}

std::string render_question_prompt(const Question& question,
                                   const std::optional<std::string>& context) {
    std::string prompt;
    if (context && !context->empty()) {
        prompt += "Context:\n" + *context + "\n\n";
    }
    prompt += "Question: " + question.text + "\n";
    if (question.is_multiple_choice()) {
        prompt += "Options:\n";
        for (const auto& choice : question.choices) {
            prompt += choice.label + ". " + choice.text + "\n";
        }
        prompt += "Think step by step if needed, then give your final choice on "
                  "the last line in the form 'Answer: <letter>'.";
    } else {
        prompt += "Think step by step if needed, then give your final answer on "
                  "the last line in the form 'Answer: <answer>'.";
    }
    return prompt;
}

std::vector<AnswerSample> sample_answers(const Question& question,
                                         const SamplingConfig& config, Backend& backend,
                                         const std::optional<std::string>& context,
                                         const std::string& stage) {
    if (config.n_samples < 2) {
        throw Error(ErrorCode::InvalidConfig, "n_samples must be at least 2");
    }
    if (util::trim(question.text).empty()) {
        throw Error(ErrorCode::Precondition, "question text is empty");
    }

    const std::string prompt = render_question_prompt(question, context);
    std::vector<AnswerSample> samples;
    samples.reserve(static_cast<std::size_t>(config.n_samples));
    for (int i = 0; i < config.n_samples; ++i) {
        GenerationRequest request;
        request.model = config.model;
        request.messages = {{"user", prompt}};
        request.temperature = config.temperature;
        request.max_tokens = config.max_tokens;
        request.request_tag = question.id + "#" + stage + "#" + std::to_string(i);
        GenerationResponse response = backend.generate(request);

        AnswerSample sample;
        sample.question_id = question.id;
        sample.sample_index = i;
        sample.raw_text = response.text;
        sample.extracted_answer = extract_final_answer(response.text, config.extraction_mode,
                                                       question, config.normalization);
        sample.provider_meta = nlohmann::json{
            {"model", config.model},
            {"prompt_tokens", response.usage.prompt_tokens},
            {"completion_tokens", response.usage.completion_tokens},
        };
        samples.push_back(std::move(sample));
    }
    return samples;
}

double shannon_entropy(const std::vector<int>& counts, double log_base) {
    long long total = 0;
    int nonzero = 0;
    int first_count = 0;
    bool uniform = true;
    for (int c : counts) {
        if (c < 0) throw Error(ErrorCode::Precondition, "negative cluster count");
        if (c == 0) continue;
        if (nonzero == 0) first_count = c;
        else if (c != first_count) uniform = false;
        ++nonzero;
        total += c;
    }
    if (total == 0) throw Error(ErrorCode::Precondition, "no samples in distribution");

    double entropy;
    if (nonzero <= 1) {
        entropy = 0.0;
    } else if (uniform) {
        // equal counts: exactly log(K), with no summation round-off
        entropy = std::log(static_cast<double>(nonzero));
    } else {
        entropy = 0.0;
        for (int c : counts) {
            if (c == 0) continue;
            double p = static_cast<double>(c) / static_cast<double>(total);
            entropy -= p * std::log(p);
        }
    }
    if (log_base > 0.0 && log_base != std::exp(1.0)) {
        entropy /= std::log(log_base);
    }
    return entropy;
}

AnswerDistribution build_distribution(const std::vector<AnswerSample>& samples) {
    if (samples.empty()) {
        throw Error(ErrorCode::Precondition, "cannot build a distribution from zero samples");
    }
    std::vector<AnswerSample> ordered(samples);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const AnswerSample& a, const AnswerSample& b) {
                         return a.sample_index < b.sample_index;
                     });

    AnswerDistribution dist;
    dist.question_id = ordered.front().question_id;
    dist.n_samples = static_cast<int>(ordered.size());

    // cluster by canonical answer, first-occurrence order
    std::map<std::string, std::size_t> index_of;
    for (const auto& sample : ordered) {
        if (sample.question_id != dist.question_id) {
            throw Error(ErrorCode::MixedQuestionIds,
                        "samples for '" + dist.question_id + "' mixed with '" +
                            sample.question_id + "'");
        }
        auto it = index_of.find(sample.extracted_answer);
        if (it == index_of.end()) {
            index_of.emplace(sample.extracted_answer, dist.clusters.size());
            dist.clusters.push_back({sample.extracted_answer, 1, 0.0});
        } else {
            ++dist.clusters[it->second].count;
        }
    }

    std::vector<int> counts;
    counts.reserve(dist.clusters.size());
    int best = -1;
    for (auto& cluster : dist.clusters) {
        cluster.probability =
            static_cast<double>(cluster.count) / static_cast<double>(dist.n_samples);
        counts.push_back(cluster.count);
        if (cluster.count > best) {   // strict: earliest cluster wins ties
            best = cluster.count;
            dist.majority_answer = cluster.answer;
        }
    }
    dist.majority_confidence = static_cast<double>(best) / static_cast<double>(dist.n_samples);
    dist.entropy = shannon_entropy(counts);
    return dist;
}

double self_consistency_confidence(const AnswerDistribution& dist) {
    if (dist.n_samples <= 0) {
        throw Error(ErrorCode::Precondition, "distribution has no samples");
    }
    return dist.majority_confidence;
}

std::optional<double> parse_confidence(const std::string& reply) {
    // first number in [0,1]; "NN%" and "NN percent" scale by 100
    for (std::size_t i = 0; i < reply.size(); ++i) {
        char c = reply[i];
        bool digit = std::isdigit(static_cast<unsigned char>(c)) != 0;
        bool dot_start = c == '.' && i + 1 < reply.size() &&
                         std::isdigit(static_cast<unsigned char>(reply[i + 1]));
        if (!digit && !dot_start) continue;
        if (i > 0 && (std::isalnum(static_cast<unsigned char>(reply[i - 1])) ||
                      reply[i - 1] == '.')) {
            continue;   // inside a word or a larger number
        }
        std::size_t end = i;
        bool seen_dot = false;
        while (end < reply.size() &&
               (std::isdigit(static_cast<unsigned char>(reply[end])) ||
                (reply[end] == '.' && !seen_dot))) {
            if (reply[end] == '.') seen_dot = true;
            ++end;
        }
        std::string token = reply.substr(i, end - i);
        if (token.back() == '.') token.pop_back();
        if (token.empty() || token == ".") continue;
        double value = std::stod(token);

        std::size_t after = end;
        while (after < reply.size() &&
               std::isspace(static_cast<unsigned char>(reply[after]))) {
            ++after;
        }
        bool percent = (after < reply.size() && reply[after] == '%') ||
                       util::starts_with_ci(reply.substr(after), "percent");
        if (percent) value /= 100.0;
        if (value >= 0.0 && value <= 1.0) return value;
        i = end;   // skip past this number and keep looking
    }
    return std::nullopt;
}

double verbalized_confidence(const Question& question, const AnswerSample& answer,
                             const std::string& model, Backend& backend) {
    if (answer.question_id != question.id) {
        throw Error(ErrorCode::Precondition, "answer does not belong to question");
    }
    GenerationRequest request;
    request.model = model;
    request.messages = {{"user", util::render_template(prompts::kVerbalization,
                                                       {{"question", question.text},
                                                        {"answer", answer.raw_text}})}};
    request.temperature = 0.0;
    request.max_tokens = 64;
    request.request_tag =
        question.id + "#verb#" + std::to_string(answer.sample_index);
    GenerationResponse response = backend.generate(request);

    auto value = parse_confidence(response.text);
    if (!value) {
        throw Error(ErrorCode::ConfidenceUnparseable,
                    "no confidence value in reply: '" + response.text + "'");
    }
    return *value;
}

double perplexity_confidence(const std::vector<double>& token_likelihoods) {
    if (token_likelihoods.empty()) {
        throw Error(ErrorCode::EmptyLikelihoods, "no token likelihoods");
    }
    for (double l : token_likelihoods) {
        if (!(l > 0.0) || l > 1.0) {
            throw Error(ErrorCode::OutOfRangeLikelihood,
                        "token likelihood outside (0,1]: " + std::to_string(l));
        }
    }
    if (token_likelihoods.size() == 1) return token_likelihoods.front();
    double log_sum = 0.0;
    for (double l : token_likelihoods) log_sum += std::log(l);
    return std::exp(log_sum / static_cast<double>(token_likelihoods.size()));
}

} // namespace uqdiag
