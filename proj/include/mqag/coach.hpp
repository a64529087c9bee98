#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "mqag/corpus.hpp"
#include "mqag/http.hpp"
#include "mqag/qagen.hpp"

namespace mqag::coach {

struct CoachQuery {
    std::string question_id;  // not sent over HTTP
    std::string image_id;
    std::string stem;
    std::vector<std::string> choices;
};

class ModelClient {
public:
    virtual ~ModelClient() = default;
    // Returns a choice index in 0..3; throws Error(Transport) on failure.
    virtual int answer(const CoachQuery& q) const = 0;
};

class ScriptedClient final : public ModelClient {
public:
    explicit ScriptedClient(std::function<int(const CoachQuery&)> script) : script_(std::move(script)) {}
    int answer(const CoachQuery& q) const override;

private:
    std::function<int(const CoachQuery&)> script_;
};

// POST {image_id, stem, choices} -> {choice_index}
class HttpModelClient final : public ModelClient {
public:
    HttpModelClient(const std::string& url, std::chrono::milliseconds timeout, http::RetryPolicy retry = {});
    int answer(const CoachQuery& q) const override;

private:
    http::JsonClient client_;
};

struct PoolEntry {
    SubQuestion question;
    std::string reason = "coach_fail";
    std::string pass_id;
    int predicted = 0;
};

struct TrainingPool {
    std::vector<PoolEntry> entries;

    bool contains(const std::string& question_id) const;
};

struct CoachConfig {
    std::set<QuestionType> exclusions{QuestionType::Mental, QuestionType::Hypothetical};
    std::string pass_id = "pass-0";
    std::size_t parallelism = 1;
};

struct CoachReport {
    TrainingPool pool;
    std::size_t probed = 0;
    std::size_t excluded = 0;         // visual sub-questions of excluded types
    std::size_t skipped_samples = 0;  // client transport failures
};

/// Probes the client with each sample's sub-questions in vision, text,
/// background-knowledge order and admits every wrongly answered one. Visual
/// sub-questions of samples whose type is excluded are never probed. A
/// transport failure skips the rest of that sample.
CoachReport coach_pass(const std::vector<SampleRecord>& samples, const std::vector<SubQuestion>& questions,
                       const ModelClient& client, const CoachConfig& cfg = {});

nlohmann::json to_json(const PoolEntry& e);

}  // namespace mqag::coach
