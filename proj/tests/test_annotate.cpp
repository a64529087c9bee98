#include <doctest.h>

#include <random>

#include <httplib.h>

#include "mqag/annotate.hpp"
#include "mqag/core.hpp"
#include "util.hpp"

using namespace mqag;
using namespace mqag::annotate;

namespace {

VerificationTask task(const std::string& id, int label = 0) {
    SubQuestion q;
    q.question_id = id;
    q.sample_id = id.substr(0, id.find('-'));
    q.image_id = "img_" + id;
    q.modality = Modality::Vision;
    q.stem = "What is the boy in front of?";
    q.choices = {"The boy is in front of people.", "The boy is in front of bus.",   "The boy is in front of tree.",
                 "The boy is in front of house.",  "The boy is in front of car.",   "The boy is in front of dog.",
                 "The boy is in front of wall."};
    q.label_index = label;
    q.asked_slot = Slot::Object;
    q.source_triplet = {"boy", "in front of", "people", Modality::Vision, q.sample_id};
    return {q};
}

Annotation ann(const std::string& who, std::set<int> sel) {
    Annotation a;
    a.annotator_id = who;
    a.selected = std::move(sel);
    return a;
}

std::vector<Annotation> batch(std::vector<std::set<int>> sels) {
    std::vector<Annotation> out;
    for (std::size_t i = 0; i < sels.size(); ++i) out.push_back(ann("a" + std::to_string(i), sels[i]));
    return out;
}

std::set<int> selected_by_anyone(const std::vector<Annotation>& b) {
    std::set<int> out;
    for (const auto& a : b)
        if (a.question_ok) out.insert(a.selected.begin(), a.selected.end());
    return out;
}

}  // namespace

TEST_CASE("annotate: unanimous agreement keeps the generated label") {
    auto t = task("s01-v", 2);
    auto o = aggregate_task(t, batch({{2}, {2}, {2}, {2}, {2}}));
    REQUIRE(std::holds_alternative<Finalized>(o));
    const auto& f = std::get<Finalized>(o);
    CHECK(f.winner == 2);
    CHECK(f.distractors == std::vector<int>{0, 1, 3});
    CHECK(f.question.choices.size() == 4);
    CHECK(f.question.answer() == t.question.choices[2]);
    CHECK(f.question.provenance.at("verification").at("votes") == 5);
}

TEST_CASE("annotate: the choice with most selections wins among those reaching three") {
    auto t = task("s02-v", 2);
    // choice 1: 3 votes, choice 4: 4 votes
    auto b = batch({{1, 4}, {1, 4}, {1, 4}, {4}, {0}});
    auto o = aggregate_task(t, b);
    REQUIRE(std::holds_alternative<Finalized>(o));
    const auto& f = std::get<Finalized>(o);
    CHECK(f.winner == 4);
    CHECK(f.question.answer() == t.question.choices[4]);
    // 0 was selected once, 1 three times: both out; generated label 2 goes last
    CHECK(f.distractors == std::vector<int>{3, 5, 6});
}

TEST_CASE("annotate: ties prefer the generated label, then the lowest id") {
    auto gen = std::get<Finalized>(aggregate_task(task("x-v", 3), batch({{1, 3}, {1, 3}, {1, 3}, {0}, {0}})));
    CHECK(gen.winner == 3);
    auto low = std::get<Finalized>(aggregate_task(task("y-v", 6), batch({{3, 1}, {1, 3}, {1, 3}, {0}, {0}})));
    CHECK(low.winner == 1);
}

TEST_CASE("annotate: rejection cases") {
    auto none = aggregate_task(task("a-v"), batch({{0, 1}, {0, 2}, {1}, {2}, {3}}));
    REQUIRE(std::holds_alternative<Rejected>(none));
    CHECK(std::get<Rejected>(none).reason.find("three") != std::string::npos);

    auto b = batch({{kNoneOfTheAbove}, {kNoneOfTheAbove}, {kNoneOfTheAbove}, {0}, {0}});
    for (int i = 0; i < 3; ++i) b[i].custom_answer = "The boy is in front of a crowd " + std::to_string(i) + ".";
    auto nota = aggregate_task(task("b-v"), b);
    REQUIRE(std::holds_alternative<Rejected>(nota));
    CHECK(std::get<Rejected>(nota).custom_answers.size() == 3);

    auto few = aggregate_task(task("c-v"), batch({{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0}}));
    REQUIRE(std::holds_alternative<Rejected>(few));
    CHECK(std::get<Rejected>(few).reason.find("never-selected") != std::string::npos);
}

TEST_CASE("annotate: skipped annotations do not vote") {
    auto b = batch({{1}, {1}, {0}, {0}, {0}});
    b[2].question_ok = false;
    auto o = aggregate_task(task("d-v"), b);
    // choice 0 has only two counted votes
    CHECK(std::holds_alternative<Rejected>(o));
}

TEST_CASE("annotate: corrections apply when three annotators agree") {
    auto b = batch({{0}, {0}, {0}, {0}, {0}});
    for (int i = 0; i < 3; ++i) {
        b[i].corrected[0] = "The boy stands in front of people.";
        b[i].corrected_stem = "What does the boy stand in front of?";
    }
    b[3].corrected[1] = "The boy is in front of a bus.";
    auto f = std::get<Finalized>(aggregate_task(task("e-v"), b));
    CHECK(f.question.answer() == "The boy stands in front of people.");
    CHECK(f.question.stem == "What does the boy stand in front of?");
    CHECK(std::find(f.question.choices.begin(), f.question.choices.end(), "The boy is in front of a bus.") ==
          f.question.choices.end());
}

TEST_CASE("annotate: random batches obey the three-vote and never-selected rules") {
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> choice(0, kDoNotKnow), size(1, 3), coin(0, 9);
    std::size_t finalized = 0;
    for (int round = 0; round < 2000; ++round) {
        auto t = task("r" + std::to_string(round) + "-v", round % kContentChoices);
        std::vector<Annotation> b;
        for (int k = 0; k < 5; ++k) {
            std::set<int> sel;
            int n = size(rng);
            // lean toward the label so some tasks finalize
            for (int i = 0; i < n; ++i) sel.insert(coin(rng) < 6 ? t.question.label_index : choice(rng));
            auto a = ann("a" + std::to_string(k), sel);
            if (sel.contains(kNoneOfTheAbove)) a.custom_answer = "something else";
            b.push_back(a);
        }
        auto o = aggregate_task(t, b);
        if (!std::holds_alternative<Finalized>(o)) continue;
        ++finalized;
        const auto& f = std::get<Finalized>(o);
        std::size_t votes = 0;
        for (const auto& a : b) votes += a.selected.contains(f.winner);
        CHECK(votes >= kMinVotes);
        CHECK(f.winner < kContentChoices);
        auto anyone = selected_by_anyone(b);
        for (int d : f.distractors) CHECK_FALSE(anyone.contains(d));
        CHECK(f.question.choices.size() == 4);
        CHECK(std::set<std::string>(f.question.choices.begin(), f.question.choices.end()).size() == 4);
        CHECK(f.question.answer() == t.question.choices[static_cast<std::size_t>(f.winner)]);
    }
    CHECK(finalized > 100);
}

TEST_CASE("annotate: metrics on unanimous batches are all one") {
    std::map<std::string, std::vector<Annotation>> bs{{"t1", batch({{0}, {0}, {0}, {0}, {0}})},
                                                      {"t2", batch({{3}, {3}, {3}, {3}, {3}})}};
    auto m = annotation_metrics(bs, {{"t1", 0}, {"t2", 3}});
    CHECK(m.individual_acc == 1.0);
    CHECK(m.group_acc == 1.0);
    CHECK(m.group_top2_recall == 1.0);
    CHECK(m.iaa == 1.0);
    CHECK(m.tasks == 2);
    CHECK(m.annotations == 10);
}

TEST_CASE("annotate: pairwise agreement counted by hand on three-of-five tasks") {
    // t1: {0}x3, {1}x2 -> 3 + 1 agreeing pairs of 10
    // t2: {0}x3, {1}, {2} -> 3 agreeing pairs of 10
    std::map<std::string, std::vector<Annotation>> bs{{"t1", batch({{0}, {0}, {0}, {1}, {1}})},
                                                      {"t2", batch({{0}, {1}, {0}, {2}, {0}})}};
    auto m = annotation_metrics(bs, {{"t1", 0}, {"t2", 0}});
    CHECK(m.iaa == doctest::Approx((4.0 / 10 + 3.0 / 10) / 2));
    CHECK(m.individual_acc == doctest::Approx(6.0 / 10));
    CHECK(m.group_acc == 1.0);
    CHECK(m.group_top2_recall == 1.0);
}

TEST_CASE("annotate: partial disagreement puts individual accuracy below group accuracy") {
    // 20 tasks, label 0 everywhere:
    //   12 unanimous
    //    4 with two annotators choosing {1}
    //    3 with one {0,1} and one {2}
    //    1 where {1} outvotes the label 3 to 2
    std::map<std::string, std::vector<Annotation>> bs;
    std::map<std::string, int> labels;
    int n = 0;
    auto add = [&](std::vector<std::set<int>> sels) {
        auto id = "t" + std::to_string(10 + n++);
        bs[id] = batch(sels);
        labels[id] = 0;
    };
    for (int i = 0; i < 12; ++i) add({{0}, {0}, {0}, {0}, {0}});
    for (int i = 0; i < 4; ++i) add({{0}, {1}, {0}, {1}, {0}});
    for (int i = 0; i < 3; ++i) add({{0}, {0, 1}, {0}, {2}, {0}});
    add({{1}, {0}, {1}, {0}, {1}});

    auto m = annotation_metrics(bs, labels);
    CHECK(m.tasks == 20);
    CHECK(m.annotations == 100);
    CHECK(m.individual_acc == doctest::Approx(83.0 / 100));
    CHECK(m.group_acc == doctest::Approx(19.0 / 20));
    CHECK(m.group_top2_recall == 1.0);
    CHECK(m.iaa == doctest::Approx((12 * 1.0 + 4 * 0.4 + 3 * 0.3 + 0.4) / 20));
    CHECK(m.individual_acc < m.group_acc);
}

TEST_CASE("annotate: annotation and task validation") {
    CHECK_THROWS_AS(annotation_from_json({{"annotator_id", "a"}, {"selected", nlohmann::json::array()}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(annotation_from_json({{"annotator_id", "a"}, {"selected", {kNoneOfTheAbove}}}), std::invalid_argument);
    CHECK_THROWS_AS(annotation_from_json({{"annotator_id", "a"}, {"selected", {0}}, {"custom_answer", "x"}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(annotation_from_json({{"annotator_id", "a"}, {"selected", {9}}}), std::invalid_argument);
    CHECK_THROWS_AS(annotation_from_json({{"annotator_id", " "}, {"selected", {0}}}), std::invalid_argument);
    CHECK_NOTHROW(annotation_from_json({{"annotator_id", "a"}, {"question_ok", false}}));

    auto a = ann("a", {0, kNoneOfTheAbove});
    a.custom_answer = "x";
    a.corrected[2] = "y";
    auto j = to_json(a);
    auto back = annotation_from_json(j);
    CHECK(back.selected == a.selected);
    CHECK(back.corrected == a.corrected);
    CHECK(back.custom_answer == a.custom_answer);

    auto t = task("s01-v");
    CHECK_NOTHROW(task_from_json(nlohmann::json(t.question)));
    auto four = t.question;
    four.choices.resize(4);
    CHECK_THROWS_AS(task_from_json(nlohmann::json(four)), std::invalid_argument);
    auto pub = public_view(t);
    CHECK(pub.at("choices").size() == 9);
    CHECK(pub.dump().find("label") == std::string::npos);
}

TEST_CASE("annotate: HTTP round trip, conflicts and restart replay") {
    testutil::TempDir dir;
    std::vector<VerificationTask> tasks{task("s01-v", 0), task("s02-v", 1)};
    std::string first_export;
    {
        AnnotationService svc(tasks, dir.path());
        Server server(svc);
        int port = server.start("127.0.0.1", 0, false);
        httplib::Client cli("127.0.0.1", port);

        auto next = cli.Get("/tasks/next?annotator=a0");
        REQUIRE(next);
        CHECK(next->status == 200);
        auto nj = nlohmann::json::parse(next->body);
        CHECK(nj.at("task_id") == "s01-v");
        CHECK(next->body.find("label") == std::string::npos);
        CHECK(cli.Get("/tasks/next")->status == 400);

        nlohmann::json body{{"annotator_id", "a0"}, {"selected", {0}}};
        auto post = cli.Post("/tasks/s01-v/annotations", body.dump(), "application/json");
        REQUIRE(post);
        CHECK(post->status == 200);
        CHECK(nlohmann::json::parse(post->body).at("state") == "open");

        auto got = nlohmann::json::parse(cli.Get("/tasks/s01-v")->body);
        REQUIRE(got.at("annotations").size() == 1);
        CHECK(got.at("annotations")[0].at("selected") == nlohmann::json{0});

        CHECK(cli.Post("/tasks/s01-v/annotations", body.dump(), "application/json")->status == 409);
        CHECK(cli.Get("/tasks/nope")->status == 404);
        CHECK(cli.Post("/tasks/nope/annotations", body.dump(), "application/json")->status == 404);
        CHECK(cli.Post("/tasks/s01-v/annotations", "{not json", "application/json")->status == 400);
        nlohmann::json nota{{"annotator_id", "a9"}, {"selected", {kNoneOfTheAbove}}};
        CHECK(cli.Post("/tasks/s01-v/annotations", nota.dump(), "application/json")->status == 400);

        // a0 already answered s01-v, so it is offered s02-v next
        CHECK(nlohmann::json::parse(cli.Get("/tasks/next?annotator=a0")->body).at("task_id") == "s02-v");

        // a skipped annotation goes to review and does not count
        nlohmann::json skip{{"annotator_id", "sk"}, {"question_ok", false}};
        CHECK(cli.Post("/tasks/s01-v/annotations", skip.dump(), "application/json")->status == 200);
        CHECK(testutil::read(dir / "review_queue.jsonl").find("\"sk\"") != std::string::npos);

        std::string state;
        for (int i = 1; i < 5; ++i) {
            nlohmann::json b{{"annotator_id", "a" + std::to_string(i)}, {"selected", {0}}};
            auto r = cli.Post("/tasks/s01-v/annotations", b.dump(), "application/json");
            REQUIRE(r);
            CHECK(r->status == 200);
            state = nlohmann::json::parse(r->body).at("state");
        }
        CHECK(state == "complete");
        CHECK(svc.complete("s01-v"));
        CHECK(nlohmann::json::parse(cli.Get("/tasks/s01-v")->body).at("state") == "complete");
        nlohmann::json late{{"annotator_id", "a7"}, {"selected", {0}}};
        CHECK(cli.Post("/tasks/s01-v/annotations", late.dump(), "application/json")->status == 409);

        auto exp = cli.Get("/export");
        REQUIRE(exp);
        CHECK(exp->status == 200);
        first_export = exp->body;
        CHECK(std::count(first_export.begin(), first_export.end(), '\n') == 1);
        auto q = subquestion_from_json(nlohmann::json::parse(first_export.substr(0, first_export.find('\n'))));
        CHECK(q.question_id == "s01-v");
        CHECK(q.choices.size() == 4);
        CHECK(q.answer() == tasks[0].question.choices[0]);
        CHECK(cli.Get("/export")->body == first_export);
        CHECK(testutil::read(dir / "export.jsonl") == first_export);
        server.stop();
    }

    AnnotationService replayed(tasks, dir.path());
    CHECK(replayed.complete("s01-v"));
    CHECK_FALSE(replayed.complete("s02-v"));
    CHECK(replayed.export_jsonl() == first_export);
    CHECK(replayed.submit("s01-v", ann("a3", {0})).status == SubmitStatus::Conflict);
    CHECK(replayed.batches().at("s01-v").size() == 5);
    CHECK(replayed.labels().at("s02-v") == 1);
    CHECK(replayed.next_task("a0") == std::optional<std::string>("s02-v"));
}
