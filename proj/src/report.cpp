#include "uqdiag/report.hpp"

#include <algorithm>

#include "uqdiag/errors.hpp"

namespace uqdiag {

namespace {

std::string pct(double fraction_value) {
    return util::format_fixed(100.0 * fraction_value, kPercentDecimals);
}

std::string unc(double value) { return util::format_fixed(value, kUncertaintyDecimals); }

std::string label_display(DiagnosisLabel label) {
    switch (label) {
        case DiagnosisLabel::QuestionAmbiguity: return "Question Ambiguity";
        case DiagnosisLabel::Both: return "Both";
        case DiagnosisLabel::KnowledgeGaps: return "Knowledge Gaps";
    }
    return "?";
}

} // namespace

util::Csv clarify_table(const StudyReport& report, const std::string& dataset,
                        const std::string& model) {
    util::Csv csv;
    csv.header = {"dataset", "model",         "label",
                  "unc_before", "unc_after",  "unc_reduction",
                  "unc_reduction_rate_pct"};
    for (const auto& row : report.rows) {
        csv.rows.push_back({dataset, model,
                            row.label ? label_display(*row.label) : "All",
                            unc(row.unc_before), unc(row.unc_after),
                            unc(row.unc_before - row.unc_after),
                            util::format_fixed(row.unc_reduction_rate, kPercentDecimals)});
    }
    return csv;
}

util::Csv inject_table(const StudyReport& report, const std::string& dataset,
                       const std::string& model) {
    util::Csv csv;
    csv.header = {"dataset",       "model",         "unc_before",
                  "acc_before_pct", "unc_after",    "acc_after_pct",
                  "unc_reduction_rate_pct", "acc_improvement_rate_pct"};
    for (const auto& row : report.rows) {
        csv.rows.push_back(
            {dataset, model, unc(row.unc_before),
             row.acc_before ? pct(*row.acc_before) : "-", unc(row.unc_after),
             row.acc_after ? pct(*row.acc_after) : "-",
             util::format_fixed(row.unc_reduction_rate, kPercentDecimals),
             row.acc_improvement_rate
                 ? util::format_fixed(*row.acc_improvement_rate, kPercentDecimals)
                 : "-"});
    }
    return csv;
}

util::Csv calibration_table(const std::vector<CalibrationReport>& reports) {
    util::Csv csv;
    csv.header = {"method", "n", "ece", "auroc", "brier", "n_bins"};
    for (const auto& report : reports) {
        csv.rows.push_back({to_string(report.method), std::to_string(report.n),
                            util::format_fixed(report.ece, 3),
                            util::format_fixed(report.auroc, 3),
                            util::format_fixed(report.brier, 3),
                            std::to_string(report.n_bins)});
    }
    return csv;
}

std::string render_console_table(const util::Csv& csv) {
    std::vector<std::size_t> widths(csv.header.size(), 0);
    auto grow = [&widths](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size() && i < widths.size(); ++i) {
            widths[i] = std::max(widths[i], row[i].size());
        }
    };
    grow(csv.header);
    for (const auto& row : csv.rows) grow(row);

    std::string out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < widths.size(); ++i) {
            std::string cell = i < row.size() ? row[i] : "";
            cell.resize(widths[i], ' ');
            out += cell;
            if (i + 1 < widths.size()) out += "  ";
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += "\n";
    };
    emit(csv.header);
    std::vector<std::string> rule;
    for (std::size_t w : widths) rule.push_back(std::string(w, '-'));
    emit(rule);
    for (const auto& row : csv.rows) emit(row);
    return out;
}

std::string render_markdown_table(const util::Csv& csv) {
    std::string out = "|";
    for (const auto& h : csv.header) out += " " + h + " |";
    out += "\n|";
    for (std::size_t i = 0; i < csv.header.size(); ++i) out += " --- |";
    out += "\n";
    for (const auto& row : csv.rows) {
        out += "|";
        for (const auto& cell : row) out += " " + cell + " |";
        out += "\n";
    }
    return out;
}

std::vector<ConfidenceRecord> confidence_records_from_csv(const util::Csv& csv) {
    auto column = [&csv](const std::string& name) {
        for (std::size_t i = 0; i < csv.header.size(); ++i) {
            if (csv.header[i] == name) return static_cast<int>(i);
        }
        return -1;
    };
    int id_col = column("question_id");
    int method_col = column("method");
    int conf_col = column("confidence");
    int correct_col = column("correct");
    if (method_col < 0 || conf_col < 0 || correct_col < 0) {
        throw Error(ErrorCode::ParseError,
                    "confidence CSV needs method, confidence and correct columns");
    }

    std::vector<ConfidenceRecord> records;
    int line = 1;
    for (const auto& row : csv.rows) {
        ++line;
        ConfidenceRecord r;
        if (id_col >= 0 && static_cast<std::size_t>(id_col) < row.size()) {
            r.question_id = row[id_col];
        }
        auto method = confidence_method_from_string(row[method_col]);
        if (!method) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line) +
                                                   ": unknown method '" + row[method_col] + "'");
        }
        r.method = *method;
        try {
            r.confidence = std::stod(row[conf_col]);
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line) + ": bad confidence value");
        }
        std::string correct = util::to_lower(util::trim(row[correct_col]));
        r.correct = correct == "1" || correct == "true" || correct == "yes";
        records.push_back(std::move(r));
    }
    return records;
}

util::Csv confidence_records_to_csv(const std::vector<ConfidenceRecord>& records) {
    util::Csv csv;
    csv.header = {"question_id", "method", "confidence", "correct"};
    for (const auto& r : records) {
        csv.rows.push_back({r.question_id, to_string(r.method),
                            util::format_fixed(r.confidence, 6), r.correct ? "1" : "0"});
    }
    return csv;
}

} // namespace uqdiag
