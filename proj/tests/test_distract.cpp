#include <doctest.h>

#include <algorithm>
#include <set>

#include "mqag/distract.hpp"
#include "mqag/qagen.hpp"
#include "mqag/svo.hpp"
#include "mqag/text.hpp"
#include "util.hpp"

using namespace mqag;
using namespace mqag::distract;

namespace {

Triplet T(std::string s, std::string p, std::string o) { return {std::move(s), std::move(p), std::move(o), Modality::Text, "s"}; }

struct FixedFill final : scorers::MaskFiller {
    std::vector<std::string> fills;
    mutable std::vector<std::string> prompts;
    std::vector<std::string> fill(const std::string& prompt, std::size_t n) const override {
        prompts.push_back(prompt);
        return {fills.begin(), fills.begin() + std::min(n, fills.size())};
    }
};

bool has_text(const std::vector<DistractorCandidate>& cs, const std::string& text) {
    return std::any_of(cs.begin(), cs.end(), [&](auto& c) { return c.text == text; });
}

}  // namespace

TEST_CASE("distract: replacing the predicate with knowledge-base neighbors") {
    kb::KnowledgeStore s;
    s.add({"in_front_of", kb::Relation::Antonym, "behind", 1.0});
    s.add({"in_front_of", kb::Relation::RelatedTo, "direction", 0.8});
    s.add({"in_front_of", kb::Relation::RelatedTo, "location", 0.7});
    auto p = scorers::Providers::offline(&s);
    auto t = T("boy", "in front of", "people");
    auto cs = gen_candidates(t, Slot::Predicate, svo::realize(t).text, kDefaultBudget, p);
    CHECK(has_text(cs, "The boy is behind the people."));
    for (const auto& c : cs) CHECK(c.replacement != "in front of");
}

TEST_CASE("distract: object slot falls back to mask filling") {
    kb::KnowledgeStore empty;
    auto p = scorers::Providers::offline(&empty);
    auto fill = std::make_shared<FixedFill>();
    fill->fills = {"mirror"};
    p.mask_filler = fill;
    auto t = T("boy", "in front of", "people");
    auto cs = gen_candidates(t, Slot::Object, svo::realize(t).text, kDefaultBudget, p);
    REQUIRE_FALSE(cs.empty());
    CHECK(fill->prompts == std::vector<std::string>{"boy is in front of [mask]"});
    auto it = std::find_if(cs.begin(), cs.end(), [](auto& c) { return c.source == Source::ImplicitMaskFill; });
    REQUIRE(it != cs.end());
    CHECK(it->replacement == "mirror");
    CHECK(it->text == svo::realize(T("boy", "in front of", "mirror")).text);

    // Other slots never consult the mask filler.
    fill->prompts.clear();
    CHECK_THROWS_AS(gen_candidates(t, Slot::Subject, svo::realize(t).text, kDefaultBudget, p), Error);
    CHECK(fill->prompts.empty());
}

TEST_CASE("distract: candidates are truncated to the budget") {
    kb::KnowledgeStore s;
    for (auto w : {"crowd", "audience", "statues", "trees", "cars", "dogs", "houses", "walls", "lamps", "flags"})
        s.add({"people", kb::Relation::RelatedTo, w, 1.0});
    auto p = scorers::Providers::offline(&s);
    auto t = T("boy", "in front of", "people");
    auto cs = gen_candidates(t, Slot::Object, svo::realize(t).text, 6, p);
    CHECK(cs.size() == 6);
    // explicit before realizer, then lexicographic
    for (std::size_t i = 1; i < cs.size(); ++i) {
        bool ordered = cs[i - 1].source < cs[i].source || (cs[i - 1].source == cs[i].source && cs[i - 1].text <= cs[i].text);
        CHECK(ordered);
    }
    CHECK_THROWS_AS(gen_candidates(t, Slot::Object, svo::realize(t).text, 5, p), Error);
}

TEST_CASE("distract: nothing to substitute is an empty candidate set") {
    kb::KnowledgeStore empty;
    auto p = scorers::Providers::offline(&empty);
    auto t = T("zork", "is near", "quux");
    try {
        gen_candidates(t, Slot::Subject, svo::realize(t).text, kDefaultBudget, p);
        FAIL("expected EmptyCandidateSet");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyCandidateSet);
    }
}

TEST_CASE("distract: lookup keys and the mask prompt") {
    auto person = lookup_keys("person1", Slot::Subject);
    REQUIRE_FALSE(person.empty());
    CHECK(person.front() == "person");
    auto obj = lookup_keys("brass instrument", Slot::Object);
    CHECK(obj.front() == "brass_instrument");
    auto pred = lookup_keys("is holding", Slot::Predicate);
    CHECK(std::find(pred.begin(), pred.end(), "hold") != pred.end());
    CHECK(mask_prompt(T("boy", "in front of", "people")) == "boy is in front of [mask]");
}

TEST_CASE("distract: candidate invariants over the mini knowledge base") {
    kb::KnowledgeStore s;
    s.ingest_tsv(testutil::data("mini_conceptnet.tsv"));
    auto p = scorers::Providers::offline(&s);
    std::vector<Triplet> ts{T("person1", "is playing", "trombone"), T("person2", "is holding", "cup"),
                            T("boy", "in front of", "people"), T("dog", "is chasing", "ball"),
                            T("trombone", "is a", "brass instrument"), T("horse", "is located in", "farm")};
    for (const auto& t : ts) {
        for (auto slot : qagen::applicable_slots(t)) {
            auto correct = svo::realize(t).text;
            std::vector<DistractorCandidate> cs;
            try {
                cs = gen_candidates(t, slot, correct, kDefaultBudget, p);
            } catch (const Error& e) {
                CHECK(e.code() == ErrorCode::EmptyCandidateSet);
                continue;
            }
            CAPTURE(correct);
            CHECK(cs.size() <= kDefaultBudget);
            const std::string original = slot == Slot::Subject ? t.subject : slot == Slot::Object ? t.object : t.predicate;
            std::set<std::string> keys;
            for (const auto& c : cs) {
                CHECK(text::comparison_key(c.text) != text::comparison_key(correct));
                CHECK(text::comparison_key(c.replacement) != text::comparison_key(original));
                CHECK(keys.insert(c.text).second);
            }
            auto again = gen_candidates(t, slot, correct, kDefaultBudget, p);
            REQUIRE(again.size() == cs.size());
            for (std::size_t i = 0; i < cs.size(); ++i) {
                CHECK(again[i].text == cs[i].text);
                CHECK(again[i].source == cs[i].source);
            }
        }
    }
}
