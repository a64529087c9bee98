#include "mqag/distract.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "mqag/kb.hpp"
#include "mqag/lexicon.hpp"
#include "mqag/text.hpp"

namespace mqag::distract {

std::string_view to_string(Source s) {
    switch (s) {
        case Source::ExplicitKb: return "explicit_kb";
        case Source::ImplicitMaskFill: return "implicit_maskfill";
        case Source::Realizer: return "realizer";
    }
    return "?";
}

std::vector<std::string> lookup_keys(const std::string& part, Slot slot) {
    std::vector<std::string> keys;
    auto add = [&](const std::string& k) {
        if (!k.empty() && std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    };
    auto toks = text::tokens(part);
    if (toks.empty()) return keys;
    if (toks.size() == 1 && text::is_person_like(toks[0])) {
        add("person");
        return keys;
    }
    add(text::kb_concept(part));
    if (slot == Slot::Predicate) {
        std::vector<std::string> rest;
        for (const auto& tok : toks)
            if (!lexicon::is_auxiliary(tok) && !lexicon::is_determiner(tok)) rest.push_back(tok);
        if (!rest.empty()) {
            if (auto v = lexicon::verb(rest[0])) rest[0] = v->base;
            add(text::kb_concept(text::join(rest)));
            add(rest[0]);
        }
    } else if (toks.size() > 1) {
        add(toks.back());
    }
    return keys;
}

std::string mask_prompt(const Triplet& t) {
    std::string verb = svo::is_prepositional(t.predicate) ? "is " + t.predicate : t.predicate;
    return t.subject + " " + verb + " " + std::string(scorers::kMaskToken);
}

namespace {

// Verb replacements agree with the original predicate's form.
std::string inflect_like(const std::string& replacement, const std::string& original_predicate) {
    auto orig = text::tokens(original_predicate);
    auto rep = text::tokens(replacement);
    if (orig.empty() || rep.empty()) return replacement;
    auto ov = lexicon::verb(orig[0]);
    auto rv = lexicon::verb(rep[0]);
    if (!ov || !rv || rv->form != lexicon::VerbForm::Base) return replacement;
    switch (ov->form) {
        case lexicon::VerbForm::ThirdPerson: rep[0] = lexicon::third_person(rv->base); break;
        case lexicon::VerbForm::Past: rep[0] = lexicon::past(rv->base); break;
        default: break;
    }
    return text::join(rep);
}

Triplet substitute(const Triplet& t, Slot slot, const std::string& replacement) {
    Triplet out = t;
    switch (slot) {
        case Slot::Subject: out.subject = replacement; break;
        case Slot::Predicate: out.predicate = inflect_like(replacement, t.predicate); break;
        case Slot::Object: out.object = replacement; break;
    }
    return out;
}

const std::string& part_of(const Triplet& t, Slot s) {
    switch (s) {
        case Slot::Subject: return t.subject;
        case Slot::Predicate: return t.predicate;
        case Slot::Object: return t.object;
    }
    return t.object;
}

}  // namespace

std::vector<DistractorCandidate> gen_candidates(const Triplet& t, Slot slot, const std::string& correct,
                                                std::size_t budget, const scorers::Providers& p) {
    if (budget < kMinBudget)
        throw Error(ErrorCode::InvalidInput, "distractor budget must be at least " + std::to_string(kMinBudget));

    const std::string original = part_of(t, slot);
    const std::string original_key = text::comparison_key(original);
    std::vector<std::pair<std::string, Source>> replacements;
    // A replacement that repeats another part would yield "the pasta is located in pasta".
    std::set<std::string> seen{original_key, text::comparison_key(t.subject), text::comparison_key(t.object)};
    auto take = [&](const std::string& concept_text, Source src) {
        auto shown = text::display_concept(concept_text);
        auto key = text::comparison_key(shown);
        if (key.empty() || !seen.insert(key).second) return;
        replacements.emplace_back(shown, src);
    };

    if (p.store) {
        for (const auto& key : lookup_keys(original, slot)) {
            if (!p.store->has_concept(key)) continue;
            for (const auto& e : p.store->neighbors(key, kb::distractor_pool(), 0))
                take(e.subject == key ? e.object : e.subject, Source::ExplicitKb);
            break;
        }
    }
    if (slot == Slot::Object && replacements.size() < budget) {
        for (const auto& fill : scorers::mask_fill(p, mask_prompt(t), budget))
            take(fill, Source::ImplicitMaskFill);
    }

    const std::string correct_key = text::comparison_key(correct);
    std::vector<DistractorCandidate> out;
    std::set<std::string> texts;
    // Article variants of one substitution both stay; the filter dedupes them.
    auto emit = [&](const std::string& sentence, const std::string& replacement, Source src) {
        auto key = text::comparison_key(sentence);
        if (key.empty() || key == correct_key || !texts.insert(sentence).second) return;
        out.push_back({sentence, replacement, src, std::nullopt, std::nullopt});
    };
    for (const auto& [rep, src] : replacements) {
        auto sub = substitute(t, slot, rep);
        emit(svo::realize(sub).text, rep, src);
        for (const auto& s : scorers::realize_from_concepts(p, {sub.subject, sub.predicate, sub.object}, 1))
            emit(s, rep, Source::Realizer);
    }

    std::stable_sort(out.begin(), out.end(), [](const DistractorCandidate& a, const DistractorCandidate& b) {
        if (a.source != b.source) return a.source < b.source;
        return a.text < b.text;
    });
    if (out.size() > budget) out.resize(budget);
    if (out.empty())
        throw Error(ErrorCode::EmptyCandidateSet, "no distractor candidates for " + svo::realize(t).text);
    return out;
}

}  // namespace mqag::distract
