#include <doctest.h>

#include <algorithm>
#include <random>

#include "mqag/metrics.hpp"
#include "oracles_eval.hpp"

using namespace mqag;
using namespace mqag::metrics;

namespace {

std::vector<PredictionRecord> parse(const std::vector<nlohmann::json>& js) {
    std::vector<PredictionRecord> out;
    for (const auto& j : js) out.push_back(prediction_from_json(j));
    return out;
}

nlohmann::json rec(const std::string& id, int q2a_pred, std::vector<std::tuple<std::string, int, int>> subs) {
    nlohmann::json s = nlohmann::json::array();
    int k = 0;
    for (auto& [m, p, l] : subs) s.push_back({{"question_id", id + "-" + std::to_string(k++)}, {"modality", m}, {"pred", p}, {"label", l}});
    return {{"sample_id", id}, {"q2a", {{"pred", q2a_pred}, {"label", 0}}}, {"subs", s}};
}

}  // namespace

TEST_CASE("metrics: indicators on hand-written records") {
    auto all = prediction_from_json(rec("a", 0, {{"vision", 1, 1}, {"text", 2, 2}, {"bk", 3, 3}}));
    auto i = indicators(all);
    CHECK(i.q2a);
    CHECK(i.q2s == true);
    for (auto m : kAllModalities) {
        CHECK(i.q2s_by.at(m));
        CHECK(i.q2as_by.at(m));
    }

    auto wrong_main = indicators(prediction_from_json(rec("b", 1, {{"vision", 1, 1}, {"text", 2, 2}, {"bk", 3, 3}})));
    CHECK_FALSE(wrong_main.q2a);
    CHECK(wrong_main.q2s == true);
    for (auto m : kAllModalities) CHECK_FALSE(wrong_main.q2as_by.at(m));

    auto two_text = indicators(prediction_from_json(rec("c", 0, {{"text", 1, 1}, {"text", 2, 3}})));
    CHECK_FALSE(two_text.q2s_by.at(Modality::Text));
    CHECK_FALSE(two_text.q2s.has_value());
    CHECK_FALSE(two_text.q2s_by.contains(Modality::Vision));
}

TEST_CASE("metrics: aggregate matches the brute-force count on 1000 random records") {
    auto js = oracle::random_predictions(1000, 2024);
    auto want = oracle::metric_counts(js);
    auto report = aggregate(parse(js));
    CHECK(report.samples == 1000);
    for (const char* name : kMetricNames) {
        CAPTURE(name);
        const auto& m = metric(report, name);
        CHECK(m.correct == want.at(name).first);
        CHECK(m.total == want.at(name).second);
        REQUIRE(m.value());
        CHECK(*m.value() == double(want.at(name).first) / double(want.at(name).second));
    }
}

TEST_CASE("metrics: joint metrics never exceed their parts") {
    auto recs = parse(oracle::random_predictions(1000, 77));
    for (auto m : kAllModalities) {
        std::vector<PredictionRecord> with;
        for (const auto& r : recs)
            if (std::any_of(r.subs.begin(), r.subs.end(), [&](auto& s) { return s.modality == m; })) with.push_back(r);
        auto rep = aggregate(with);
        CHECK(*rep.q2as_by.at(m).value() <= std::min(*rep.q2a.value(), *rep.q2s_by.at(m).value()));
    }
    std::vector<PredictionRecord> full;
    for (const auto& r : recs)
        if (indicators(r).q2s) full.push_back(r);
    auto rep = aggregate(full);
    for (auto m : kAllModalities) CHECK(*rep.q2s.value() <= *rep.q2s_by.at(m).value());
}

TEST_CASE("metrics: aggregate is permutation invariant") {
    auto recs = parse(oracle::random_predictions(300, 5));
    auto base = to_json(aggregate(recs));
    std::mt19937 rng(3);
    std::shuffle(recs.begin(), recs.end(), rng);
    CHECK(to_json(aggregate(recs)) == base);
}

TEST_CASE("metrics: small hand-computed aggregates") {
    std::vector<nlohmann::json> js;
    for (int i = 0; i < 10; ++i) js.push_back(rec("s" + std::to_string(i), i < 7 ? 0 : 1, {}));
    auto rep = aggregate(parse(js));
    CHECK(*rep.q2a.value() == 0.7);
    CHECK_FALSE(rep.q2s.value().has_value());
    CHECK_FALSE(rep.q2s_by.at(Modality::Vision).value().has_value());

    // q2a always right, vision right half the time
    std::vector<nlohmann::json> half{rec("a", 0, {{"vision", 1, 1}}), rec("b", 0, {{"vision", 1, 2}})};
    auto r2 = aggregate(parse(half));
    CHECK(*r2.q2s_by.at(Modality::Vision).value() == 0.5);
    CHECK(*r2.q2as_by.at(Modality::Vision).value() == 0.5);
    CHECK(aggregate({}).samples == 0);
    CHECK_FALSE(aggregate({}).q2a.value().has_value());
}

TEST_CASE("metrics: per question type breakdown") {
    auto recs = parse(oracle::random_predictions(200, 9));
    std::map<std::string, QuestionType> one, two;
    for (const auto& r : recs) {
        one[r.sample_id] = QuestionType::Scene;
        two[r.sample_id] = std::stoi(r.sample_id.substr(1)) % 2 ? QuestionType::Activity : QuestionType::Explanation;
    }
    auto single = by_question_type(recs, one);
    REQUIRE(single.size() == 1);
    CHECK(to_json(single.at(QuestionType::Scene)) == to_json(aggregate(recs)));

    auto split = by_question_type(recs, two);
    CHECK(split.size() == 2);
    CHECK_FALSE(split.contains(QuestionType::Mental));
    std::vector<nlohmann::json> odd;
    auto js = oracle::random_predictions(200, 9);
    for (const auto& j : js)
        if (std::stoi(j["sample_id"].get<std::string>().substr(1)) % 2) odd.push_back(j);
    auto want = oracle::metric_counts(odd);
    for (const char* name : kMetricNames) {
        CHECK(metric(split.at(QuestionType::Activity), name).correct == want.at(name).first);
        CHECK(metric(split.at(QuestionType::Activity), name).total == want.at(name).second);
    }
    auto csv = by_type_csv(split);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.rfind("question_type,samples,q2a,q2a_n", 0) == 0);
}

TEST_CASE("metrics: prediction parsing rejects bad values") {
    CHECK_THROWS_AS(prediction_from_json({{"sample_id", "x"}, {"q2a", {{"pred", 4}, {"label", 0}}}}), std::invalid_argument);
    CHECK_THROWS_AS(prediction_from_json({{"q2a", {{"pred", 0}, {"label", 0}}}}), std::invalid_argument);
    auto j = rec("a", 0, {{"vision", 1, 1}});
    CHECK(to_json(prediction_from_json(j))["subs"][0]["modality"] == "vision");
}

TEST_CASE("metrics: uniformity test") {
    CHECK(uniformity_p_value({250, 250, 250, 250}) == doctest::Approx(1.0));
    CHECK(uniformity_p_value({1000, 0, 0, 0}) < 1e-6);
    // chi2 = 2 on 3 degrees of freedom
    CHECK(uniformity_p_value({30, 20, 25, 25}) == doctest::Approx(0.5724067).epsilon(1e-6));
}
