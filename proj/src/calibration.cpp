#include "uqdiag/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uqdiag/errors.hpp"

namespace uqdiag {

double ece(const std::vector<ConfidenceRecord>& records, int n_bins) {
    if (records.empty()) throw Error(ErrorCode::EmptyRecords, "ece needs records");
    if (n_bins < 1) throw Error(ErrorCode::Precondition, "n_bins must be >= 1");

    // bin k covers ((k)/K, (k+1)/K]; confidence 0 lands in bin 0
    std::vector<int> count(static_cast<std::size_t>(n_bins), 0);
    std::vector<double> conf_sum(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<int> correct_sum(static_cast<std::size_t>(n_bins), 0);
    for (const auto& r : records) {
        if (r.confidence < 0.0 || r.confidence > 1.0) {
            throw Error(ErrorCode::Precondition,
                        "confidence outside [0,1]: " + std::to_string(r.confidence));
        }
        int bin = static_cast<int>(std::ceil(r.confidence * n_bins)) - 1;
        bin = std::clamp(bin, 0, n_bins - 1);
        ++count[bin];
        conf_sum[bin] += r.confidence;
        correct_sum[bin] += r.correct ? 1 : 0;
    }

    const double n = static_cast<double>(records.size());
    double total = 0.0;
    for (int k = 0; k < n_bins; ++k) {
        if (count[k] == 0) continue;
        double acc = static_cast<double>(correct_sum[k]) / count[k];
        double conf = conf_sum[k] / count[k];
        total += (count[k] / n) * std::abs(acc - conf);
    }
    return total;
}

double auroc(const std::vector<ConfidenceRecord>& records) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& r : records) (r.correct ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) {
        throw Error(ErrorCode::DegenerateClasses,
                    "auroc needs at least one correct and one incorrect record");
    }

    // Mann-Whitney by rank sums with mid-ranks for ties.
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&records](std::size_t a, std::size_t b) {
        return records[a].confidence < records[b].confidence;
    });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() &&
               records[order[j]].confidence == records[order[i]].confidence) {
            ++j;
        }
        double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (records[order[k]].correct) pos_rank_sum += mid_rank;
        }
        i = j;
    }
    double u = pos_rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double brier(const std::vector<ConfidenceRecord>& records) {
    if (records.empty()) throw Error(ErrorCode::EmptyRecords, "brier needs records");
    double total = 0.0;
    for (const auto& r : records) {
        double y = r.correct ? 1.0 : 0.0;
        total += (r.confidence - y) * (r.confidence - y);
    }
    return total / static_cast<double>(records.size());
}

std::vector<CalibrationReport> method_comparison(
    const std::map<ConfidenceMethod, std::vector<ConfidenceRecord>>& per_method, int n_bins) {
    std::vector<CalibrationReport> reports;
    for (const auto& [method, records] : per_method) {
        if (records.empty()) continue;
        try {
            CalibrationReport report;
            report.method = method;
            report.n = static_cast<int>(records.size());
            report.n_bins = n_bins;
            report.ece = ece(records, n_bins);
            report.auroc = auroc(records);
            report.brier = brier(records);
            reports.push_back(report);
        } catch (const Error& e) {
            throw Error(e.code(), std::string(to_string(method)) + ": " + e.what());
        }
    }
    return reports;
}

} // namespace uqdiag
