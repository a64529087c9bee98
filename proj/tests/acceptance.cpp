// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include "mini.hpp"
#include "mqag/annotate.hpp"
#include "mqag/coach.hpp"
#include "mqag/graph.hpp"
#include "mqag/metrics.hpp"
#include "mqag/select.hpp"
#include "mqag/text.hpp"
#include "oracles.hpp"
#include "oracles_eval.hpp"

using namespace mqag;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && pass) {
            pass = false;
            detail = what;
        }
    }
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0 && s > budget_s && o.pass) {
        o.pass = false;
        o.detail = "runtime " + std::to_string(s) + " s over " + std::to_string(budget_s) + " s";
    }
    if (!o.pass) ++failures;
    std::printf("%s  %-22s %.3fs  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), s, o.detail.c_str());
    std::fflush(stdout);
}

// Upper tail of chi-square with 3 degrees of freedom, closed form.
double chi2_df3_sf(double x) {
    return std::erfc(std::sqrt(x / 2)) + std::sqrt(2 * x / M_PI) * std::exp(-x / 2);
}

std::vector<annotate::Annotation> batch(const std::vector<std::set<int>>& sels) {
    std::vector<annotate::Annotation> out;
    for (std::size_t i = 0; i < sels.size(); ++i) {
        annotate::Annotation a;
        a.annotator_id = "a" + std::to_string(i);
        a.selected = sels[i];
        out.push_back(a);
    }
    return out;
}

annotate::VerificationTask task(const std::string& id) {
    SubQuestion q;
    q.question_id = id;
    q.sample_id = id;
    q.image_id = "img_" + id;
    q.stem = "What is the boy in front of?";
    for (auto w : {"people", "bus", "tree", "house", "car", "dog", "wall"})
        q.choices.push_back(std::string("The boy is in front of ") + w + ".");
    q.label_index = 0;
    q.source_triplet = {"boy", "in front of", "people", Modality::Vision, id};
    return {q};
}

}  // namespace

int main() {
    std::printf("Acceptance criteria (offline providers, mini corpus)\n");

    criterion("node-pair oracle", 1.0, [] {
        Outcome o;
        kb::KnowledgeStore store;
        store.ingest_tsv(testutil::data("mini_conceptnet.tsv"));
        auto p = scorers::Providers::offline(&store);
        double worst = 0;
        for (const auto& f : oracle::node_pair_fixtures()) {
            double got = graph::score_node_pair({f.a_term, f.a_context}, {f.b_term, f.b_context}, p);
            double diff = std::fabs(got - oracle::node_pair(f));
            worst = std::max(worst, diff);
            o.require(diff <= 1e-9, std::string(f.name) + ": got " + std::to_string(got));
        }
        if (o.pass) {
            std::ostringstream os;
            os << "5 fixtures, max |diff| " << worst;
            o.detail = os.str();
        }
        return o;
    });

    criterion("relevance oracle", 1.0, [] {
        Outcome o;
        auto f = oracle::rank_fixture();
        auto p = scorers::Providers::offline(nullptr);
        std::vector<Triplet> ts;
        for (const auto& r : f.rows)
            ts.push_back({r.subject, r.predicate, r.object, kAllModalities.at(std::size_t(r.modality_rank)), "s01"});
        auto got = select::rank_triplets(ts, f.statement, {"img", f.tags}, p);
        auto want = oracle::rank(f);
        o.require(got.size() == want.size(), "row count");
        for (std::size_t i = 0; o.pass && i < got.size(); ++i) {
            o.require(got[i].sentence == f.rows[want[i].row].sentence, "order differs at rank " + std::to_string(i));
            o.require(std::fabs(got[i].total - want[i].total) <= 1e-12, "total differs at rank " + std::to_string(i));
        }
        if (o.pass) o.detail = "4 triplets, order and totals match";
        return o;
    });

    criterion("worked example", 0, [] {
        Outcome o;
        Triplet t{"boy", "in front of", "people", Modality::Vision, "s"};
        auto d = qagen::make_question(t, Slot::Object);
        o.require(d.stem == "What is the boy in front of?", "stem: " + d.stem);
        o.require(d.answer == "The boy is in front of people.", "answer: " + d.answer);
        if (o.pass) o.detail = "\"" + d.stem + "\" / \"" + d.answer + "\"";
        return o;
    });

    criterion("filter invariants", 30.0, [] {
        Outcome o;
        auto ctx = pipeline::Context::create(testutil::mini_config());
        const double cutoff = ctx.config.filter.similarity_cutoff;
        std::vector<std::size_t> positions(4, 0);
        std::size_t questions = 0, distractors = 0, seeds = 0;
        for (std::uint64_t seed = 1; questions < 1000; ++seed, ++seeds) {
            ctx.config.seed = seed;
            auto run = testutil::mini_run(ctx);
            std::map<std::string, const SampleRecord*> recs;
            for (const auto& r : run.records) recs[r.sample_id] = &r;
            for (const auto& q : run.questions) {
                ++questions;
                o.require(q.choices.size() == 4, q.question_id + ": choice count");
                std::set<std::string> keys;
                for (const auto& c : q.choices) keys.insert(text::comparison_key(c));
                o.require(keys.size() == 4, q.question_id + ": duplicate choices");
                ++positions.at(std::size_t(q.label_index));
                auto statement = corpus::build_textual_statement(*recs.at(q.sample_id)).text;
                for (int i = 0; i < 4; ++i) {
                    if (i == q.label_index) continue;
                    ++distractors;
                    double s = oracle::cosine(q.choices[std::size_t(i)], statement);
                    o.require(s <= cutoff + 1e-12, q.question_id + ": similarity " + std::to_string(s));
                }
            }
            if (seeds > 200) break;
        }
        o.require(questions >= 1000, "only " + std::to_string(questions) + " questions");
        double n = double(questions), e = n / 4, x = 0;
        for (auto c : positions) x += (double(c) - e) * (double(c) - e) / e;
        double p = chi2_df3_sf(x);
        o.require(std::fabs(p - metrics::uniformity_p_value(positions)) < 1e-9, "chi-square p disagrees");
        o.require(p > 0.01, "label positions not uniform, p = " + std::to_string(p));
        if (o.pass) {
            std::ostringstream os;
            os << questions << " questions over " << seeds << " seeds, " << distractors
               << " distractors all <= " << cutoff << ", label positions " << positions[0] << "/" << positions[1]
               << "/" << positions[2] << "/" << positions[3] << " (p = " << p << ")";
            o.detail = os.str();
        }
        return o;
    });

    criterion("metric oracle", 5.0, [] {
        Outcome o;
        auto js = oracle::random_predictions(1000, 31337);
        std::vector<metrics::PredictionRecord> recs;
        for (const auto& j : js) recs.push_back(metrics::prediction_from_json(j));
        auto want = oracle::metric_counts(js);
        auto rep = metrics::aggregate(recs);
        for (const char* name : metrics::kMetricNames) {
            const auto& m = metrics::metric(rep, name);
            o.require(m.correct == want.at(name).first && m.total == want.at(name).second,
                      std::string(name) + " differs from brute force");
        }
        for (auto m : kAllModalities) {
            std::vector<metrics::PredictionRecord> with;
            for (const auto& r : recs)
                for (const auto& s : r.subs)
                    if (s.modality == m) {
                        with.push_back(r);
                        break;
                    }
            auto sub = metrics::aggregate(with);
            o.require(*sub.q2as_by.at(m).value() <= std::min(*sub.q2a.value(), *sub.q2s_by.at(m).value()),
                      "q2as_x > min(q2a, q2s_x)");
        }
        std::vector<metrics::PredictionRecord> full;
        for (const auto& r : recs)
            if (metrics::indicators(r).q2s) full.push_back(r);
        auto fr = metrics::aggregate(full);
        for (auto m : kAllModalities) o.require(*fr.q2s.value() <= *fr.q2s_by.at(m).value(), "q2s > q2s_x");
        if (o.pass) o.detail = "1000 records, 8 metrics exact, identities hold";
        return o;
    });

    criterion("coaching", 0, [] {
        Outcome o;
        auto run = testutil::mini_run(7);
        std::map<std::string, int> labels;
        std::map<std::string, Modality> mods;
        for (const auto& q : run.questions) {
            labels[q.question_id] = q.label_index;
            mods[q.question_id] = q.modality;
        }
        coach::ScriptedClient client([&](const coach::CoachQuery& q) {
            int l = labels.at(q.question_id);
            return mods.at(q.question_id) == Modality::Vision ? (l + 1) % 4 : l;
        });
        auto rep = coach::coach_pass(run.records, run.questions, client);
        std::map<std::string, QuestionType> type;
        for (const auto& r : run.records) type[r.sample_id] = r.question_type;
        std::set<std::string> want, got;
        for (const auto& q : run.questions) {
            auto t = type.at(q.sample_id);
            if (q.modality == Modality::Vision && t != QuestionType::Mental && t != QuestionType::Hypothetical)
                want.insert(q.question_id);
        }
        for (const auto& e : rep.pool.entries) got.insert(e.question.question_id);
        o.require(!want.empty(), "no visual sub-questions");
        o.require(got == want, "pool differs from expected set");
        if (o.pass)
            o.detail = std::to_string(got.size()) + " visual sub-questions admitted, " + std::to_string(rep.excluded) +
                       " excluded by type";
        return o;
    });

    criterion("annotation aggregation", 0, [] {
        Outcome o;
        std::map<std::string, std::vector<annotate::Annotation>> bs;
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

        for (const auto& [id, b] : bs) {
            auto out = annotate::aggregate_task(task(id), b);
            const auto* f = std::get_if<annotate::Finalized>(&out);
            o.require(f != nullptr, id + " was rejected");
            if (!f) continue;
            std::size_t votes = 0;
            std::set<int> anyone;
            for (const auto& a : b) {
                votes += a.selected.contains(f->winner);
                anyone.insert(a.selected.begin(), a.selected.end());
            }
            o.require(votes >= 3, id + ": winner has " + std::to_string(votes) + " votes");
            for (int d : f->distractors) o.require(!anyone.contains(d), id + ": distractor was selected");
        }
        // hand counts: 83 of 100 exact selections, 19 of 20 modal choices,
        // label in the top two everywhere, agreeing pairs 10/10 x12, 4/10 x5, 3/10 x3
        auto m = annotate::annotation_metrics(bs, labels);
        o.require(std::fabs(m.individual_acc - 0.83) < 1e-12, "individual_acc " + std::to_string(m.individual_acc));
        o.require(std::fabs(m.group_acc - 0.95) < 1e-12, "group_acc " + std::to_string(m.group_acc));
        o.require(std::fabs(m.group_top2_recall - 1.0) < 1e-12, "top2 " + std::to_string(m.group_top2_recall));
        o.require(std::fabs(m.iaa - (12 * 1.0 + 5 * 0.4 + 3 * 0.3) / 20) < 1e-12, "iaa " + std::to_string(m.iaa));
        o.require(m.individual_acc < m.group_acc, "individual_acc >= group_acc");
        if (o.pass) {
            std::ostringstream os;
            os << "20 tasks: individual " << m.individual_acc << " < group " << m.group_acc << ", top2 "
               << m.group_top2_recall << ", iaa " << m.iaa;
            o.detail = os.str();
        }
        return o;
    });

    criterion("determinism", 0, [] {
        Outcome o;
        testutil::TempDir dir;
        auto a = testutil::mini_config();
        a.output_dir = dir / "a";
        auto b = a;
        b.output_dir = dir / "b";
        pipeline::generate(a);
        pipeline::generate(b);
        auto qa = testutil::read(dir / "a/subquestions.jsonl");
        o.require(!qa.empty(), "no output");
        o.require(qa == testutil::read(dir / "b/subquestions.jsonl"), "subquestions.jsonl differs");
        o.require(testutil::read(dir / "a/candidates.jsonl") == testutil::read(dir / "b/candidates.jsonl"),
                  "candidates.jsonl differs");
        if (o.pass) o.detail = std::to_string(qa.size()) + " bytes identical across runs";
        return o;
    });

    criterion("desk-scale statement", 0, [] {
        Outcome o;
        std::printf("      Not reproducible here: the 630k-question dataset scale (110k visual sub-questions),\n"
                    "      the per-model accuracy tables (e.g. VL-BERT 75.53 Q2A) and the +1.21 Q2A coaching gain\n"
                    "      need licensed VCR data and GPU training. Substituted by the property checks above\n"
                    "      and the stats report below.\n");
        auto run = testutil::mini_run(7);
        auto s = pipeline::stats(run.questions);
        auto j = pipeline::to_json(s);
        std::printf("      stats: %s\n", j.dump().c_str());
        for (const char* k : {"questions", "by_modality", "average_answer_words", "split"})
            o.require(j.contains(k), std::string("stats lacks ") + k);
        o.require(s.questions > 0, "no questions on the mini corpus");
        if (o.pass) o.detail = "stats schema reported on the mini corpus";
        return o;
    });

    std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
