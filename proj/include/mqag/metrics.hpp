#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mqag/core.hpp"

namespace mqag::metrics {

struct SubPrediction {
    std::string question_id;
    Modality modality = Modality::Vision;
    int pred = 0;
    int label = 0;
};

struct PredictionRecord {
    std::string sample_id;
    int q2a_pred = 0;
    int q2a_label = 0;
    std::vector<SubPrediction> subs;
};

// {sample_id, q2a:{pred,label}, subs:[{question_id, modality, pred, label}]}
PredictionRecord prediction_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PredictionRecord& r);

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

// Undefined indicators are nullopt.
struct Indicators {
    bool q2a = false;
    std::map<Modality, bool> q2s_by;    // only modalities the sample has
    std::map<Modality, bool> q2as_by;
    std::optional<bool> q2s;            // needs all three modalities
};

// A modality counts as answered only if every sub-question of that modality is
// correct.
Indicators indicators(const PredictionRecord& r);

struct Metric {
    std::size_t correct = 0;
    std::size_t total = 0;

    // Absent when nothing was defined.
    std::optional<double> value() const {
        if (total == 0) return std::nullopt;
        return static_cast<double>(correct) / static_cast<double>(total);
    }
};

struct MetricReport {
    Metric q2a;
    Metric q2s;
    std::map<Modality, Metric> q2s_by;
    std::map<Modality, Metric> q2as_by;
    std::size_t samples = 0;
};

inline constexpr std::array<const char*, 8> kMetricNames = {"q2a",   "q2s",    "q2s_v",   "q2s_t",
                                                            "q2s_bk", "q2as_v", "q2as_t", "q2as_bk"};

MetricReport aggregate(const std::vector<PredictionRecord>& recs);

// Lookup by one of kMetricNames.
const Metric& metric(const MetricReport& r, std::string_view name);

nlohmann::json to_json(const MetricReport& r);
std::string format_table(const MetricReport& r);

// Rows only for question types that have samples. Samples missing from the
// map are skipped.
std::map<QuestionType, MetricReport> by_question_type(const std::vector<PredictionRecord>& recs,
                                                      const std::map<std::string, QuestionType>& types);

std::string by_type_csv(const std::map<QuestionType, MetricReport>& table);

// p-value of Pearson's chi-square goodness-of-fit test against the uniform
// distribution over the bins.
double uniformity_p_value(const std::vector<std::size_t>& counts);

}  // namespace mqag::metrics
