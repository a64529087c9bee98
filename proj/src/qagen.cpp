#include "mqag/qagen.hpp"

#include "mqag/lexicon.hpp"
#include "mqag/text.hpp"

namespace mqag {

void to_json(nlohmann::json& j, const SubQuestion& q) {
    j = nlohmann::json{{"question_id", q.question_id},
                       {"sample_id", q.sample_id},
                       {"image_id", q.image_id},
                       {"modality", std::string(to_string(q.modality))},
                       {"stem", q.stem},
                       {"choices", q.choices},
                       {"label_index", q.label_index},
                       {"asked_slot", std::string(to_string(q.asked_slot))},
                       {"source_triplet", q.source_triplet},
                       {"provenance", q.provenance}};
}

SubQuestion subquestion_from_json(const nlohmann::json& j) {
    try {
        SubQuestion q;
        q.question_id = j.at("question_id").get<std::string>();
        q.sample_id = j.at("sample_id").get<std::string>();
        q.image_id = j.at("image_id").get<std::string>();
        auto m = parse_modality(j.at("modality").get<std::string>());
        if (!m) throw std::invalid_argument("modality: unknown value");
        q.modality = *m;
        q.stem = j.at("stem").get<std::string>();
        q.choices = j.at("choices").get<std::vector<std::string>>();
        q.label_index = j.at("label_index").get<int>();
        if (q.label_index < 0 || static_cast<std::size_t>(q.label_index) >= q.choices.size())
            throw std::invalid_argument("label_index: out of range");
        auto s = parse_slot(j.at("asked_slot").get<std::string>());
        if (!s) throw std::invalid_argument("asked_slot: unknown value");
        q.asked_slot = *s;
        const auto& t = j.at("source_triplet");
        q.source_triplet = Triplet{t.at("s").get<std::string>(), t.at("p").get<std::string>(),
                                   t.at("o").get<std::string>(), q.modality, q.sample_id};
        if (j.contains("provenance")) q.provenance = j.at("provenance");
        return q;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("sub-question: ") + e.what());
    }
}

namespace qagen {
namespace {

std::vector<std::string> split(const std::string& s) { return text::tokens(s); }

std::string tail(const std::vector<std::string>& w, std::size_t from) {
    return text::join(std::vector<std::string>(w.begin() + static_cast<std::ptrdiff_t>(std::min(from, w.size())), w.end()));
}

std::string with(const std::string& a, const std::string& b) { return b.empty() ? a : a + " " + b; }

std::string object_stem(const Triplet& t) {
    const std::string subj = svo::subject_phrase(t.subject);
    if (svo::is_prepositional(t.predicate)) return "What is " + subj + " " + t.predicate + "?";
    auto w = split(t.predicate);
    if (w.empty()) return "What is " + subj + "?";
    if (lexicon::is_copula(w[0])) {
        auto rest = tail(w, 1);
        if (rest.empty() || rest == "a" || rest == "an") return "What is " + subj + "?";
        return "What " + w[0] + " " + subj + " " + rest + "?";
    }
    if (lexicon::is_modal(w[0])) return "What " + w[0] + " " + subj + " " + (w.size() > 1 ? tail(w, 1) : "do") + "?";
    if (auto v = lexicon::verb(w[0])) {
        std::string aux = v->form == lexicon::VerbForm::Past ? "did"
                          : v->form == lexicon::VerbForm::Base ? "do"
                                                               : "does";
        return "What " + aux + " " + subj + " " + with(v->base, tail(w, 1)) + "?";
    }
    return "What does " + subj + " " + t.predicate + "?";
}

std::string subject_stem(const Triplet& t) {
    const std::string wh = text::is_person_like(text::lower(t.subject)) ? "Who" : "What";
    if (svo::is_prepositional(t.predicate)) return wh + " is " + t.predicate + " " + t.object + "?";
    auto w = split(t.predicate);
    if (!w.empty() && !lexicon::is_auxiliary(w[0])) {
        auto v = lexicon::verb(w[0]);
        if (v && v->form == lexicon::VerbForm::ThirdPerson && !lexicon::is_stative(v->base))
            return wh + " is " + with(lexicon::gerund(v->base), tail(w, 1)) + " " + t.object + "?";
    }
    return wh + " " + t.predicate + " " + t.object + "?";
}

std::string predicate_stem(const Triplet& t) {
    return "What is the relationship between " + svo::subject_phrase(t.subject) + " and " + t.object + "?";
}

bool contains_phrase(const std::string& stem, const std::string& phrase) {
    auto needle = text::comparison_key(phrase);
    if (needle.empty()) return false;
    return (" " + text::comparison_key(stem) + " ").find(" " + needle + " ") != std::string::npos;
}

const std::string& slot_part(const Triplet& t, Slot s) {
    switch (s) {
        case Slot::Subject: return t.subject;
        case Slot::Predicate: return t.predicate;
        case Slot::Object: return t.object;
    }
    return t.object;
}

}  // namespace

Draft make_question(const Triplet& t, Slot slot) {
    Draft d;
    switch (slot) {
        case Slot::Object: d.stem = object_stem(t); break;
        case Slot::Subject: d.stem = subject_stem(t); break;
        case Slot::Predicate: d.stem = predicate_stem(t); break;
    }
    d.stem = text::sentence_case(text::collapse_spaces(d.stem));
    d.answer = svo::realize(t).text;
    return d;
}

std::vector<Slot> applicable_slots(const Triplet& t) {
    std::vector<Slot> out;
    const bool people = text::is_person_like(text::lower(t.subject)) && text::is_person_like(text::lower(t.object));
    for (auto s : {Slot::Subject, Slot::Predicate, Slot::Object}) {
        if (s == Slot::Object && people) continue;
        if (contains_phrase(make_question(t, s).stem, slot_part(t, s))) continue;
        out.push_back(s);
    }
    return out;
}

std::optional<Slot> choose_slot(const Triplet& t, std::uint64_t seed) {
    auto slots = applicable_slots(t);
    if (slots.empty()) return std::nullopt;
    return slots[seed % slots.size()];
}

std::string question_id(const std::string& sample_id, Modality m) {
    return sample_id + "-" + std::string(modality_code(m));
}

std::uint64_t question_seed(const std::string& qid, std::uint64_t config_seed) {
    return text::fnv1a64(qid) ^ config_seed;
}

}  // namespace qagen
}  // namespace mqag
