#include "mqag/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "mqag/lexicon.hpp"
#include "mqag/text.hpp"

namespace mqag {

using nlohmann::json;

bool KeywordSet::contains(std::string_view term) const {
    return std::any_of(keywords.begin(), keywords.end(),
                       [&](const Keyword& k) { return k.term == term; });
}

void to_json(json& j, const SampleRecord& r) {
    j = json{{"sample_id", r.sample_id},
             {"image_id", r.image_id},
             {"question_text", r.question_text},
             {"answer_choices", r.answer_choices},
             {"label_index", r.label_index},
             {"question_type", to_string(r.question_type)},
             {"object_tags", r.object_tags}};
    if (r.rationale_text) j["rationale_text"] = *r.rationale_text;
    if (r.caption) j["caption"] = *r.caption;
}

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw std::invalid_argument(field + ": " + why);
}

std::string required_string(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) bad_field(field, "missing field");
    if (!it->is_string()) bad_field(field, "expected string");
    return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) return std::nullopt;
    if (!it->is_string()) bad_field(field, "expected string (absent keys encode missing values)");
    return it->get<std::string>();
}

std::vector<std::string> string_list(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) bad_field(field, "missing field");
    if (!it->is_array()) bad_field(field, "expected array");
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) bad_field(field, "expected array of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

SampleRecord sample_from_json(const json& j) {
    static const std::set<std::string> known = {
        "sample_id", "image_id",      "question_text", "answer_choices", "label_index",
        "rationale_text", "question_type", "caption", "object_tags"};
    if (!j.is_object()) bad_field("<record>", "expected JSON object");
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) bad_field(key, "unknown field");

    SampleRecord r;
    r.sample_id = required_string(j, "sample_id");
    r.image_id = required_string(j, "image_id");
    r.question_text = required_string(j, "question_text");
    if (text::trim(r.question_text).empty()) bad_field("question_text", "must be non-empty");
    r.answer_choices = string_list(j, "answer_choices");
    if (r.answer_choices.size() != 4)
        bad_field("answer_choices",
                  "expected exactly 4 choices, got " + std::to_string(r.answer_choices.size()));
    auto label = j.find("label_index");
    if (label == j.end()) bad_field("label_index", "missing field");
    if (!label->is_number_integer()) bad_field("label_index", "expected integer");
    r.label_index = label->get<int>();
    if (r.label_index < 0 || r.label_index > 3) bad_field("label_index", "out of range 0-3");
    r.rationale_text = optional_string(j, "rationale_text");
    auto type = required_string(j, "question_type");
    auto parsed = parse_question_type(type);
    if (!parsed) bad_field("question_type", "unknown question type '" + type + "'");
    r.question_type = *parsed;
    r.caption = optional_string(j, "caption");
    r.object_tags = string_list(j, "object_tags");
    return r;
}

namespace corpus {

LoadResult load_corpus(const std::filesystem::path& path, Format) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open corpus " + path.string());
    LoadResult result;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            result.errors.push_back({lineno, "<json>", e.what()});
            continue;
        }
        try {
            result.records.push_back(sample_from_json(j));
        } catch (const std::invalid_argument& e) {
            std::string msg = e.what();
            auto colon = msg.find(':');
            result.errors.push_back(
                {lineno, msg.substr(0, colon),
                 "line " + std::to_string(lineno) + ": " + msg});
        }
    }
    if (in.bad()) throw Error(ErrorCode::Io, "read failure on " + path.string());
    return result;
}

std::string serialize(const SampleRecord& r) { return json(r).dump(); }

Statement build_visual_statement(const SampleRecord& rec) {
    if (!rec.caption || text::trim(*rec.caption).empty())
        throw Error(ErrorCode::AbsentCaption, "sample " + rec.sample_id + " has no caption");
    return {text::normalize_sentence(*rec.caption), Modality::Vision, rec.sample_id};
}

namespace {

using Words = std::vector<std::string>;

bool is_wh(std::string_view w) {
    return w == "why" || w == "what" || w == "who" || w == "where" || w == "how" ||
           w == "when" || w == "which" || w == "whose";
}

std::string lower_of(const std::string& w) { return text::lower(w); }

Words slice(const Words& w, std::size_t b, std::size_t e) {
    e = std::min(e, w.size());
    if (b >= e) return {};
    return Words(w.begin() + static_cast<std::ptrdiff_t>(b), w.begin() + static_cast<std::ptrdiff_t>(e));
}

Words lowered(const Words& w) {
    Words out;
    for (const auto& x : w) out.push_back(lower_of(x));
    return out;
}

// Index of the first gerund after position `from`, if any.
std::optional<std::size_t> find_form(const Words& w, std::size_t from,
                                     lexicon::VerbForm form) {
    for (std::size_t i = from; i < w.size(); ++i) {
        auto v = lexicon::verb(lower_of(w[i]));
        if (v && v->form == form && !lexicon::is_auxiliary(lower_of(w[i]))) return i;
    }
    return std::nullopt;
}

std::size_t subject_end_heuristic(const Words& w, std::size_t from) {
    auto low = lowered(w);
    for (std::size_t i = from; i < w.size(); ++i)
        if (lexicon::preposition_at(low, i) > 0 && i > from) return i;
    if (from < w.size() && lexicon::is_determiner(low[from])) return std::min(w.size(), from + 2);
    return std::min(w.size(), from + 1);
}

std::string conjugate(const std::string& base, std::string_view aux) {
    if (aux == "was" || aux == "were" || aux == "did") return lexicon::past(base);
    if (aux == "are" || aux == "do" || aux == "am") return base;
    return lexicon::third_person(base);
}

// Declarative form of an inverted clause ("is person1 playing X" ->
// "person1 plays X"). Input excludes the wh-word.
Words declarative(const Words& w) {
    if (w.empty()) return w;
    std::string aux = lower_of(w[0]);
    if (aux == "is" || aux == "are" || aux == "was" || aux == "were" || aux == "am") {
        if (auto g = find_form(w, 2, lexicon::VerbForm::Gerund)) {
            auto base = lexicon::verb(lower_of(w[*g]))->base;
            Words out = slice(w, 1, *g);
            out.push_back(conjugate(base, aux));
            for (auto& x : slice(w, *g + 1, w.size())) out.push_back(x);
            return out;
        }
        std::size_t se = subject_end_heuristic(w, 1);
        Words out = slice(w, 1, se);
        out.push_back(w[0]);
        for (auto& x : slice(w, se, w.size())) out.push_back(x);
        return out;
    }
    if (aux == "does" || aux == "do" || aux == "did") {
        if (auto b = find_form(w, 2, lexicon::VerbForm::Base)) {
            Words out = slice(w, 1, *b);
            out.push_back(conjugate(lexicon::verb(lower_of(w[*b]))->base, aux));
            for (auto& x : slice(w, *b + 1, w.size())) out.push_back(x);
            return out;
        }
        return slice(w, 1, w.size());
    }
    if (lexicon::is_modal(aux) || aux == "has" || aux == "have" || aux == "had") {
        auto v = find_form(w, 2, aux.starts_with("ha") ? lexicon::VerbForm::PastParticiple
                                                       : lexicon::VerbForm::Base);
        if (!v && aux.starts_with("ha")) v = find_form(w, 2, lexicon::VerbForm::Past);
        std::size_t se = v ? *v : subject_end_heuristic(w, 1);
        Words out = slice(w, 1, se);
        out.push_back(w[0]);
        for (auto& x : slice(w, se, w.size())) out.push_back(x);
        return out;
    }
    return w;
}

std::string answer_span(const std::string& answer) {
    std::string a = text::collapse_spaces(text::trim(answer));
    while (!a.empty() && (text::is_terminal_punct(a.back()) || a.back() == ' ')) a.pop_back();
    auto first = text::words(a);
    if (!first.empty()) {
        auto low = lower_of(first.front());
        if (!text::is_person_tag(low) && first.front() != "I") {
            for (auto& c : a) {
                if (std::isalpha(static_cast<unsigned char>(c))) {
                    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                    break;
                }
            }
        }
    }
    return a;
}

std::string finish(const std::string& body) { return text::normalize_sentence(body); }

}  // namespace

Statement build_textual_statement(const SampleRecord& rec) {
    std::string q = text::collapse_spaces(text::trim(rec.question_text));
    while (!q.empty() && (text::is_terminal_punct(q.back()) || q.back() == ' ')) q.pop_back();
    const std::string answer = answer_span(rec.correct_answer());
    Words w = text::words(q);
    Statement st{{}, Modality::Text, rec.sample_id};
    if (w.empty()) {
        st.text = finish(answer);
        return st;
    }

    const std::string wh = lower_of(w.front());
    if (!is_wh(wh)) {
        st.text = finish(q + " because " + answer);
        return st;
    }
    Words rest = slice(w, 1, w.size());
    Words low = lowered(rest);

    if (wh == "why") {
        st.text = finish(text::join(declarative(rest)) + " because " + answer);
        return st;
    }
    if (wh == "how" && !low.empty() && lexicon::is_auxiliary(low[0])) {
        st.text = finish(text::join(declarative(rest)) + " by " + answer);
        return st;
    }
    if ((wh == "what" || wh == "who" || wh == "where") && !low.empty() &&
        lexicon::is_copula(low[0])) {
        const std::string& aux = rest[0];
        // what is X doing?
        if (wh == "what" && low.size() >= 3 && low.back() == "doing") {
            Words subject = slice(rest, 1, rest.size() - 1);
            auto aw = text::words(answer);
            if (aw.size() >= 2 && text::is_person_like(lower_of(aw[0])) &&
                lexicon::is_verbal(lower_of(aw[1]))) {
                // answer is already a clause: swap its pronoun for the subject
                auto pos = answer.find(' ');
                st.text = finish(text::join(subject) + answer.substr(pos));
            } else {
                st.text = finish(text::join(subject) + " " + aux + " " + answer);
            }
            return st;
        }
        // what/who/where is X V-ing ...?
        if (auto g = find_form(rest, 2, lexicon::VerbForm::Gerund)) {
            Words out = slice(rest, 1, *g);
            out.push_back(aux);
            for (auto& x : slice(rest, *g, rest.size())) out.push_back(x);
            st.text = finish(text::join(out) + " " + answer);
            return st;
        }
        // what/who/where is X?
        Words out = slice(rest, 1, rest.size());
        if (!out.empty()) {
            out.push_back(aux);
            st.text = finish(text::join(out) + " " + answer);
            return st;
        }
    }
    if ((wh == "what" || wh == "who" || wh == "where") && !low.empty() &&
        (low[0] == "does" || low[0] == "do" || low[0] == "did")) {
        st.text = finish(text::join(declarative(rest)) + " " + answer);
        return st;
    }
    // unmatched wh-question: stem minus the wh-word, then the answer
    st.text = finish(text::join(rest) + " " + answer);
    return st;
}

KeywordSet extract_keywords(const std::vector<Statement>& statements, std::size_t k) {
    if (k == 0) throw std::invalid_argument("extract_keywords: k must be >= 1");
    struct Stat {
        std::size_t tf = 0;
        double first_weight = 0.0;
    };
    std::map<std::string, Stat> stats;
    for (const auto& st : statements) {
        std::string sentence;
        auto flush = [&] {
            std::vector<std::string> toks;
            for (auto& t : text::content_tokens(sentence))
                if (!text::is_person_tag(t)) toks.push_back(t);
            for (std::size_t i = 0; i < toks.size(); ++i) {
                auto [it, fresh] = stats.try_emplace(toks[i]);
                if (fresh)
                    it->second.first_weight =
                        static_cast<double>(i + 1) / static_cast<double>(toks.size());
                ++it->second.tf;
            }
            sentence.clear();
        };
        for (char c : st.text) {
            if (text::is_terminal_punct(c)) {
                flush();
            } else {
                sentence.push_back(c);
            }
        }
        flush();
    }

    KeywordSet out;
    double max_score = 0.0;
    for (const auto& [term, s] : stats) {
        double score = static_cast<double>(s.tf) * (1.0 + 0.5 * s.first_weight);
        out.keywords.push_back({term, score});
        max_score = std::max(max_score, score);
    }
    for (auto& kw : out.keywords) kw.score /= max_score;
    std::sort(out.keywords.begin(), out.keywords.end(), [](const Keyword& a, const Keyword& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.term < b.term;
    });
    if (out.keywords.size() > k) out.keywords.resize(k);
    return out;
}

}  // namespace corpus
}  // namespace mqag
