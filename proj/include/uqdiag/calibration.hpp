#pragma once
// Calibration metrics over (confidence, correctness) pairs: expected
// calibration error, AUROC, and Brier score.

#include <map>
#include <vector>

#include "core.hpp"

namespace uqdiag {

struct CalibrationReport {
    ConfidenceMethod method = ConfidenceMethod::SelfConsistency;
    int n = 0;
    double ece = 0.0;
    double auroc = 0.0;
    double brier = 0.0;
    int n_bins = 0;
};

// Equal-width bins over [0,1], right-closed except the first bin which is
// closed on both ends: bin k covers (k/K, (k+1)/K], bin 0 covers [0, 1/K].
// ECE = sum |B_k|/N * |acc(B_k) - conf(B_k)|; empty bins contribute nothing.
double ece(const std::vector<ConfidenceRecord>& records, int n_bins);

// Probability that a correct record outranks an incorrect one by confidence,
// ties counted half (Mann-Whitney). Computed by rank sums; needs at least one
// record of each class or DegenerateClasses is thrown.
double auroc(const std::vector<ConfidenceRecord>& records);

// Mean squared error between confidence and the 0/1 correctness indicator.
double brier(const std::vector<ConfidenceRecord>& records);

// One report per method present in the input, in enum order (methods with no
// records are simply absent; a provider without token likelihoods yields no
// Perplexity entry). Metric errors propagate tagged with the method name.
std::vector<CalibrationReport> method_comparison(
    const std::map<ConfidenceMethod, std::vector<ConfidenceRecord>>& per_method,
    int n_bins);

} // namespace uqdiag
