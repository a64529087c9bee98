#include "mqag/coach.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <optional>
#include <thread>

#include <spdlog/spdlog.h>

namespace mqag::coach {

int ScriptedClient::answer(const CoachQuery& q) const { return script_(q); }

HttpModelClient::HttpModelClient(const std::string& url, std::chrono::milliseconds timeout, http::RetryPolicy retry)
    : client_(url, timeout, retry) {}

int HttpModelClient::answer(const CoachQuery& q) const {
    auto res = client_.post({{"image_id", q.image_id}, {"stem", q.stem}, {"choices", q.choices}});
    try {
        int idx = res.at("choice_index").get<int>();
        if (idx < 0 || idx > 3) throw Error(ErrorCode::Transport, "choice_index out of range");
        return idx;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Transport, std::string("coach client returned an unexpected body: ") + e.what());
    }
}

bool TrainingPool::contains(const std::string& question_id) const {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const PoolEntry& e) { return e.question.question_id == question_id; });
}

namespace {

struct SampleOutcome {
    std::vector<PoolEntry> admitted;
    std::size_t probed = 0;
    std::size_t excluded = 0;
    bool skipped = false;
};

SampleOutcome run_sample(const SampleRecord* rec, std::vector<const SubQuestion*> qs, const ModelClient& client,
                         const CoachConfig& cfg) {
    SampleOutcome out;
    std::stable_sort(qs.begin(), qs.end(), [](const SubQuestion* a, const SubQuestion* b) {
        if (a->modality != b->modality) return modality_rank(a->modality) < modality_rank(b->modality);
        return a->question_id < b->question_id;
    });
    const bool excluded_type = rec && cfg.exclusions.contains(rec->question_type);
    for (const auto* q : qs) {
        if (q->modality == Modality::Vision && excluded_type) {
            ++out.excluded;
            continue;
        }
        int pred = 0;
        try {
            pred = client.answer({q->question_id, q->image_id, q->stem, q->choices});
        } catch (const Error& e) {
            if (!e.retryable()) throw;
            spdlog::warn("coach: skipping sample {}: {}", q->sample_id, e.what());
            out.skipped = true;
            out.admitted.clear();
            return out;
        }
        ++out.probed;
        if (pred != q->label_index) out.admitted.push_back({*q, "coach_fail", cfg.pass_id, pred});
    }
    return out;
}

}  // namespace

CoachReport coach_pass(const std::vector<SampleRecord>& samples, const std::vector<SubQuestion>& questions,
                       const ModelClient& client, const CoachConfig& cfg) {
    std::map<std::string, const SampleRecord*> by_id;
    for (const auto& s : samples) by_id.emplace(s.sample_id, &s);

    // Samples in first-appearance order of their sub-questions.
    std::vector<std::string> order;
    std::map<std::string, std::vector<const SubQuestion*>> grouped;
    for (const auto& q : questions) {
        auto [it, fresh] = grouped.try_emplace(q.sample_id);
        if (fresh) order.push_back(q.sample_id);
        it->second.push_back(&q);
    }

    std::vector<SampleOutcome> outcomes(order.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < order.size(); i = next++) {
            auto it = by_id.find(order[i]);
            outcomes[i] = run_sample(it == by_id.end() ? nullptr : it->second, grouped[order[i]], client, cfg);
        }
    };
    std::size_t width = std::max<std::size_t>(1, std::min(cfg.parallelism, order.size()));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < width; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    CoachReport rep;
    for (auto& o : outcomes) {
        rep.probed += o.probed;
        rep.excluded += o.excluded;
        if (o.skipped) ++rep.skipped_samples;
        for (auto& e : o.admitted)
            if (!rep.pool.contains(e.question.question_id)) rep.pool.entries.push_back(std::move(e));
    }
    return rep;
}

nlohmann::json to_json(const PoolEntry& e) {
    nlohmann::json j = e.question;
    j["reason"] = e.reason;
    j["pass_id"] = e.pass_id;
    j["predicted"] = e.predicted;
    return j;
}

}  // namespace mqag::coach
