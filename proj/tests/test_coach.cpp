#include <doctest.h>

#include <atomic>
#include <set>
#include <thread>

#include <httplib.h>

#include "mini.hpp"
#include "mqag/coach.hpp"

using namespace mqag;
using namespace mqag::coach;

namespace {

const testutil::MiniRun& mini() {
    static const testutil::MiniRun run = testutil::mini_run(7);
    return run;
}

std::map<std::string, int> labels_of(const std::vector<SubQuestion>& qs) {
    std::map<std::string, int> out;
    for (const auto& q : qs) out[q.question_id] = q.label_index;
    return out;
}

ScriptedClient failing(std::set<Modality> fail, const std::vector<SubQuestion>& qs) {
    auto labels = labels_of(qs);
    std::map<std::string, Modality> mods;
    for (const auto& q : qs) mods[q.question_id] = q.modality;
    return ScriptedClient([=](const CoachQuery& q) {
        int l = labels.at(q.question_id);
        return fail.contains(mods.at(q.question_id)) ? (l + 1) % 4 : l;
    });
}

std::set<std::string> pool_ids(const CoachReport& r) {
    std::set<std::string> out;
    for (const auto& e : r.pool.entries) out.insert(e.question.question_id);
    return out;
}

}  // namespace

TEST_CASE("coach: an always-correct client leaves the pool empty") {
    const auto& run = mini();
    REQUIRE(run.questions.size() > 30);
    auto rep = coach_pass(run.records, run.questions, failing({}, run.questions));
    CHECK(rep.pool.entries.empty());
    CHECK(rep.skipped_samples == 0);
}

TEST_CASE("coach: failing exactly the visual sub-questions admits them minus excluded types") {
    const auto& run = mini();
    std::map<std::string, QuestionType> type;
    for (const auto& r : run.records) type[r.sample_id] = r.question_type;
    std::set<std::string> want;
    std::size_t excluded = 0;
    for (const auto& q : run.questions) {
        if (q.modality != Modality::Vision) continue;
        auto t = type.at(q.sample_id);
        if (t == QuestionType::Mental || t == QuestionType::Hypothetical)
            ++excluded;
        else
            want.insert(q.question_id);
    }
    REQUIRE(excluded > 0);
    REQUIRE_FALSE(want.empty());

    auto client = failing({Modality::Vision}, run.questions);
    auto rep = coach_pass(run.records, run.questions, client);
    CHECK(pool_ids(rep) == want);
    CHECK(rep.pool.entries.size() == want.size());
    CHECK(rep.excluded == excluded);
    CHECK(rep.probed == run.questions.size() - excluded);
    for (const auto& e : rep.pool.entries) {
        CHECK(e.reason == "coach_fail");
        CHECK(e.pass_id == "pass-0");
        CHECK(e.predicted != e.question.label_index);
        auto j = to_json(e);
        CHECK(j.at("reason") == "coach_fail");
        CHECK(j.at("question_id") == e.question.question_id);
    }

    CoachConfig par;
    par.parallelism = 4;
    par.pass_id = "pass-1";
    auto again = coach_pass(run.records, run.questions, client, par);
    CHECK(pool_ids(again) == want);
    std::vector<std::string> a, b;
    for (const auto& e : rep.pool.entries) a.push_back(e.question.question_id);
    for (const auto& e : again.pool.entries) b.push_back(e.question.question_id);
    CHECK(a == b);
}

TEST_CASE("coach: every failed sub-question is admitted independently") {
    const auto& run = mini();
    auto rep = coach_pass(run.records, run.questions, failing({Modality::Text, Modality::BackgroundKnowledge}, run.questions));
    std::set<std::string> want;
    for (const auto& q : run.questions)
        if (q.modality != Modality::Vision) want.insert(q.question_id);
    CHECK(pool_ids(rep) == want);
    CHECK(rep.pool.contains(*want.begin()));
}

TEST_CASE("coach: a transport failure skips the sample and the pass continues") {
    const auto& run = mini();
    auto labels = labels_of(run.questions);
    const std::string victim = run.questions.front().sample_id;
    ScriptedClient client([&](const CoachQuery& q) -> int {
        if (q.question_id.rfind(victim + "-", 0) == 0) throw Error(ErrorCode::Transport, "down");
        return (labels.at(q.question_id) + 1) % 4;
    });
    CoachConfig cfg;
    cfg.exclusions.clear();
    auto rep = coach_pass(run.records, run.questions, client, cfg);
    CHECK(rep.skipped_samples == 1);
    std::size_t victim_qs = 0;
    for (const auto& q : run.questions) victim_qs += q.sample_id == victim;
    CHECK(rep.pool.entries.size() == run.questions.size() - victim_qs);
}

TEST_CASE("coach: HTTP client posts the query and reads choice_index") {
    httplib::Server srv;
    std::atomic<int> hits{0};
    nlohmann::json seen;
    srv.Post("/answer", [&](const httplib::Request& req, httplib::Response& res) {
        ++hits;
        seen = nlohmann::json::parse(req.body);
        res.set_content(R"({"choice_index": 2})", "application/json");
    });
    srv.Post("/bad", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"choice_index": 9})", "application/json");
    });
    int port = srv.bind_to_any_port("127.0.0.1");
    std::thread t([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();

    CoachQuery q{"s01-v", "img_0001", "What is person1 playing?", {"a", "b", "c", "d"}};
    HttpModelClient client("http://127.0.0.1:" + std::to_string(port) + "/answer", std::chrono::milliseconds(2000));
    CHECK(client.answer(q) == 2);
    CHECK(hits == 1);
    CHECK(seen.at("image_id") == "img_0001");
    CHECK(seen.at("stem") == q.stem);
    CHECK(seen.at("choices").size() == 4);
    CHECK_FALSE(seen.contains("question_id"));

    HttpModelClient bad("http://127.0.0.1:" + std::to_string(port) + "/bad", std::chrono::milliseconds(2000));
    CHECK_THROWS_AS(bad.answer(q), Error);
    srv.stop();
    t.join();
}
