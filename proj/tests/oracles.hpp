#pragma once
// Test-only oracles, deliberately written as literal transcriptions of the
// definitions (direct summation, exhaustive pair counting, per-record bin
// scans). They stay independent of the library implementations they check.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "uqdiag/core.hpp"
#include "uqdiag/errors.hpp"

namespace oracles {

//-sum p ln p over nonzero counts
inline double entropy_direct(const std::vector<int>& counts) {
    long long total = 0;
    for (int c : counts) total += c;
    double h = 0.0;
    for (int c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log(p);
    }
    return h;
}

// literal bin scan: bin 0 is [0, 1/K], bin k>0 is (k/K, (k+1)/K]
inline double ece_bruteforce(const std::vector<uqdiag::ConfidenceRecord>& records, int n_bins) {
    double total = 0.0;
    for (int k = 0; k < n_bins; ++k) {
        double lo = static_cast<double>(k) / n_bins;
        double hi = static_cast<double>(k + 1) / n_bins;
        int count = 0;
        double conf_sum = 0.0;
        int correct = 0;
        for (const auto& r : records) {
            bool inside = k == 0 ? (r.confidence >= 0.0 && r.confidence <= hi)
                                 : (r.confidence > lo && r.confidence <= hi);
            if (!inside) continue;
            ++count;
            conf_sum += r.confidence;
            correct += r.correct ? 1 : 0;
        }
        if (count == 0) continue;
        double acc = static_cast<double>(correct) / count;
        double conf = conf_sum / count;
        total += (static_cast<double>(count) / records.size()) * std::fabs(acc - conf);
    }
    return total;
}

// exhaustive pair counting, ties worth one half
inline double auroc_pairs(const std::vector<uqdiag::ConfidenceRecord>& records) {
    double wins = 0.0;
    long long pairs = 0;
    for (const auto& pos : records) {
        if (!pos.correct) continue;
        for (const auto& neg : records) {
            if (neg.correct) continue;
            ++pairs;
            if (pos.confidence > neg.confidence) wins += 1.0;
            else if (pos.confidence == neg.confidence) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

inline double brier_direct(const std::vector<uqdiag::ConfidenceRecord>& records) {
    double total = 0.0;
    for (const auto& r : records) {
        double y = r.correct ? 1.0 : 0.0;
        total += (r.confidence - y) * (r.confidence - y);
    }
    return total / static_cast<double>(records.size());
}

// random count vector: K clusters, all counts >= 1, total <= max_n
inline std::vector<int> random_counts(std::mt19937_64& rng, int max_k, int max_n) {
    std::uniform_int_distribution<int> k_dist(1, max_k);
    int k = k_dist(rng);
    std::uniform_int_distribution<int> n_dist(k, max_n);
    int n = n_dist(rng);
    std::vector<int> counts(static_cast<std::size_t>(k), 1);
    int remaining = n - k;
    std::uniform_int_distribution<int> pick(0, k - 1);
    while (remaining-- > 0) ++counts[static_cast<std::size_t>(pick(rng))];
    return counts;
}

// samples whose extracted answers realize the given cluster counts, with the
// first occurrence order equal to the count order
inline std::vector<uqdiag::AnswerSample> samples_from_counts(const std::vector<int>& counts,
                                                             const std::string& question_id) {
    std::vector<uqdiag::AnswerSample> samples;
    int index = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] > 0) {
            uqdiag::AnswerSample s;
            s.question_id = question_id;
            s.sample_index = index++;
            s.extracted_answer = "ans" + std::to_string(k);
            s.raw_text = s.extracted_answer;
            samples.push_back(std::move(s));
        }
    }
    for (std::size_t k = 0; k < counts.size(); ++k) {
        for (int c = 1; c < counts[k]; ++c) {
            uqdiag::AnswerSample s;
            s.question_id = question_id;
            s.sample_index = index++;
            s.extracted_answer = "ans" + std::to_string(k);
            s.raw_text = s.extracted_answer;
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

inline std::vector<uqdiag::ConfidenceRecord> random_records(std::mt19937_64& rng, int n,
                                                            bool force_both_classes = true) {
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    std::vector<uqdiag::ConfidenceRecord> records;
    for (int i = 0; i < n; ++i) {
        uqdiag::ConfidenceRecord r;
        r.question_id = "r" + std::to_string(i);
        r.confidence = conf(rng);
        r.correct = coin(rng);
        records.push_back(std::move(r));
    }
    if (force_both_classes && n >= 2) {
        records[0].correct = true;
        records[1].correct = false;
    }
    return records;
}

template <typename Fn>
uqdiag::ErrorCode thrown_code(Fn&& fn) {
    try {
        fn();
    } catch (const uqdiag::Error& e) {
        return e.code();
    }
    throw std::runtime_error("expected an Error to be thrown");
}

} // namespace oracles
