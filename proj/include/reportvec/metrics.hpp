#pragma once

// Three-class risk labels and support-weighted evaluation metrics.

#include <array>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "reportvec/errors.hpp"

namespace rvec {

enum class RiskClass : int { NoRisk = 0, MediumRisk = 1, HighRisk = 2 };

constexpr int kNumClasses = 3;

inline std::string to_string(RiskClass c) {
    switch (c) {
        case RiskClass::NoRisk: return "no_risk";
        case RiskClass::MediumRisk: return "medium_risk";
        case RiskClass::HighRisk: return "high_risk";
    }
    return "?";
}

inline RiskClass parse_risk_class(const std::string& s) {
    if (s == "no_risk") return RiskClass::NoRisk;
    if (s == "medium_risk") return RiskClass::MediumRisk;
    if (s == "high_risk") return RiskClass::HighRisk;
    throw parse_error("unknown risk class '" + s + "'");
}

// Collapses the 1..5 confidence grades: 1 -> no risk, 2-4 -> medium risk,
// 5 -> high risk.
inline RiskClass regroup_label(int label) {
    if (label == 1) return RiskClass::NoRisk;
    if (label >= 2 && label <= 4) return RiskClass::MediumRisk;
    if (label == 5) return RiskClass::HighRisk;
    throw validation_error("label " + std::to_string(label) + " outside 1..5");
}

struct Metrics {
    // confusion[truth][predicted]
    std::array<std::array<long, kNumClasses>, kNumClasses> confusion{};
    std::array<long, kNumClasses> support{};
    std::array<double, kNumClasses> precision{};
    std::array<double, kNumClasses> recall{};
    std::array<double, kNumClasses> f1{};
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    bool division_by_zero = false; // some class had an empty denominator
};

inline Metrics evaluate(std::span<const RiskClass> predictions, std::span<const RiskClass> truth) {
    if (predictions.size() != truth.size()) {
        throw validation_error("evaluate: " + std::to_string(predictions.size()) +
                               " predictions vs " + std::to_string(truth.size()) + " labels");
    }
    if (truth.empty()) throw validation_error("evaluate: empty input");

    Metrics m;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ++m.confusion[static_cast<int>(truth[i])][static_cast<int>(predictions[i])];
    }
    long total = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        long tp = m.confusion[c][c];
        long truth_count = 0;
        long pred_count = 0;
        for (int k = 0; k < kNumClasses; ++k) {
            truth_count += m.confusion[c][k];
            pred_count += m.confusion[k][c];
        }
        m.support[c] = truth_count;
        total += truth_count;
        if (pred_count > 0) {
            m.precision[c] = static_cast<double>(tp) / static_cast<double>(pred_count);
        } else {
            m.precision[c] = 0.0;
            m.division_by_zero = true;
        }
        if (truth_count > 0) {
            m.recall[c] = static_cast<double>(tp) / static_cast<double>(truth_count);
        } else {
            m.recall[c] = 0.0;
            m.division_by_zero = true;
        }
        const double pr = m.precision[c] + m.recall[c];
        if (pr > 0.0) {
            m.f1[c] = 2.0 * m.precision[c] * m.recall[c] / pr;
        } else {
            m.f1[c] = 0.0;
            m.division_by_zero = true;
        }
    }
    for (int c = 0; c < kNumClasses; ++c) {
        const double w = static_cast<double>(m.support[c]) / static_cast<double>(total);
        m.weighted_precision += w * m.precision[c];
        m.weighted_recall += w * m.recall[c];
        m.weighted_f1 += w * m.f1[c];
    }
    return m;
}

inline nlohmann::ordered_json metrics_to_json(const Metrics& m) {
    nlohmann::ordered_json j;
    for (int c = 0; c < kNumClasses; ++c) {
        nlohmann::ordered_json jc;
        jc["precision"] = m.precision[c];
        jc["recall"] = m.recall[c];
        jc["f1"] = m.f1[c];
        jc["support"] = m.support[c];
        j["per_class"][to_string(static_cast<RiskClass>(c))] = jc;
    }
    j["weighted"]["precision"] = m.weighted_precision;
    j["weighted"]["recall"] = m.weighted_recall;
    j["weighted"]["f1"] = m.weighted_f1;
    j["confusion"] = m.confusion;
    j["division_by_zero"] = m.division_by_zero;
    return j;
}

} // namespace rvec
