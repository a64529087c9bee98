#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mqag/qagen.hpp"

namespace mqag::annotate {

inline constexpr int kContentChoices = 7;
inline constexpr int kNoneOfTheAbove = 7;
inline constexpr int kDoNotKnow = 8;

/// A generated sub-question with seven candidate answers awaiting human
/// verification. `question.label_index` is the generated-correct choice and
/// never leaves the service.
struct VerificationTask {
    SubQuestion question;

    const std::string& task_id() const { return question.question_id; }
};

// Throws std::invalid_argument unless the record has exactly seven choices.
VerificationTask task_from_json(const nlohmann::json& j);

// What annotators see: no label, choices 0..6 plus the two sentinels.
nlohmann::json public_view(const VerificationTask& t);

struct Annotation {
    std::string annotator_id;
    std::set<int> selected;                 // 0..8, sentinels included
    std::map<int, std::string> corrected;   // choice id -> edited text
    std::optional<std::string> corrected_stem;
    std::optional<std::string> custom_answer;
    bool question_ok = true;  // false: annotator could not understand, routed to review
};

nlohmann::json to_json(const Annotation& a);
// Throws std::invalid_argument describing the first problem.
Annotation annotation_from_json(const nlohmann::json& j);

inline constexpr std::size_t kAnnotatorsPerTask = 5;
inline constexpr std::size_t kMinVotes = 3;
inline constexpr std::size_t kFinalDistractors = 3;

struct Finalized {
    SubQuestion question;  // 4 choices, label at the winning choice
    int winner = 0;        // choice id in the task
    std::vector<int> distractors;
};

struct Rejected {
    std::string task_id;
    std::string reason;
    std::vector<std::string> custom_answers;
};

using Outcome = std::variant<Finalized, Rejected>;

/// The winner is the choice with the most selections among those selected by
/// at least three annotators (ties: the generated label, then the lowest id).
/// Distractors come only from content choices nobody selected. Skipped
/// annotations are ignored.
Outcome aggregate_task(const VerificationTask& task, const std::vector<Annotation>& batch);

struct AnnotationMetrics {
    double individual_acc = 0.0;
    double group_acc = 0.0;
    double group_top2_recall = 0.0;
    double iaa = 0.0;  // mean over tasks of pairwise exact-selection agreement
    std::size_t tasks = 0;
    std::size_t annotations = 0;
};

// labels: task id -> correct choice id. Tasks without a label or without
// annotations are skipped.
AnnotationMetrics annotation_metrics(const std::map<std::string, std::vector<Annotation>>& batches,
                                     const std::map<std::string, int>& labels);

nlohmann::json to_json(const AnnotationMetrics& m);

enum class SubmitStatus { Accepted, Conflict, NotFound, Invalid };

struct SubmitResult {
    SubmitStatus status = SubmitStatus::Accepted;
    std::string message;
    bool complete = false;
};

/// Task store with a per-task append-only journal under `state_dir/journal`.
/// Every accepted annotation is fsync'd before submit() returns; construction
/// replays the journals. Skipped annotations also go to
/// `state_dir/review_queue.jsonl`.
class AnnotationService {
public:
    AnnotationService(std::vector<VerificationTask> tasks, std::filesystem::path state_dir);

    // Lowest-id incomplete task this annotator has not answered yet.
    std::optional<std::string> next_task(const std::string& annotator) const;

    std::optional<nlohmann::json> task_json(const std::string& task_id) const;

    SubmitResult submit(const std::string& task_id, const Annotation& a);

    bool complete(const std::string& task_id) const;

    // Finalized questions as JSONL sorted by task id; also written to
    // `state_dir/export.jsonl`.
    std::string export_jsonl() const;

    std::vector<Outcome> outcomes() const;
    std::map<std::string, std::vector<Annotation>> batches() const;
    std::map<std::string, int> labels() const;

    const std::filesystem::path& state_dir() const { return dir_; }

private:
    struct Entry {
        VerificationTask task;
        std::vector<Annotation> counted;
        std::set<std::string> annotators;
    };

    void apply(Entry& e, const Annotation& a);
    std::filesystem::path journal_path(const std::string& task_id) const;

    std::filesystem::path dir_;
    std::map<std::string, Entry> tasks_;
    mutable std::mutex mu_;
    mutable std::mutex export_mu_;
};

std::vector<VerificationTask> load_tasks(const std::filesystem::path& path);

class Server {
public:
    explicit Server(AnnotationService& service);
    ~Server();

    // Returns the bound port (0 picks a free one). Blocks in listen() until
    // stop() when `block` is true.
    int start(const std::string& host, int port, bool block);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mqag::annotate
