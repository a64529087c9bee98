#include "mqag/svo.hpp"

#include <algorithm>

#include <json.hpp>

#include "mqag/lexicon.hpp"
#include "mqag/text.hpp"

namespace mqag {

void to_json(nlohmann::json& j, const Triplet& t) {
    j = nlohmann::json{{"s", t.subject}, {"p", t.predicate}, {"o", t.object}};
}

namespace svo {

namespace {

using Tokens = std::vector<std::string>;

std::string span_text(const Tokens& toks, std::size_t b, std::size_t e) {
    std::vector<std::string> kept;
    for (std::size_t i = b; i < e && i < toks.size(); ++i)
        if (!lexicon::is_determiner(toks[i])) kept.push_back(toks[i]);
    return text::join(kept);
}

bool stopword_only(const std::string& part) {
    auto toks = text::tokens(part);
    return std::all_of(toks.begin(), toks.end(),
                       [](const std::string& t) { return text::is_stopword(t); });
}

// A verb form right after a determiner, or in first position, reads as a noun
// ("the dance floor"). Auxiliaries are always verbal.
bool verbal_at(const Tokens& toks, std::size_t i) {
    if (lexicon::is_auxiliary(toks[i])) return i > 0;
    if (!lexicon::verb(toks[i])) return false;
    if (i == 0) return false;
    return !lexicon::is_determiner(toks[i - 1]);
}

std::size_t next_preposition(const Tokens& toks, std::size_t from, std::size_t limit) {
    for (std::size_t i = from; i < limit; ++i)
        if (lexicon::preposition_at(toks, i) > 0) return i;
    return limit;
}

class ClauseParser {
public:
    ClauseParser(const Tokens& toks, Modality m, const std::string& sample)
        : toks_(toks), modality_(m), sample_(sample) {}

    std::vector<Triplet> run() {
        const std::size_t n = toks_.size();
        std::size_t main = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (verbal_at(toks_, i)) {
                main = i;
                break;
            }
        }
        std::size_t subject_end = main;
        for (std::size_t i = 1; i < main; ++i) {
            if (lexicon::preposition_at(toks_, i) > 0) {
                subject_end = i;
                break;
            }
        }
        subject_ = span_text(toks_, 0, subject_end);
        if (subject_.empty() || stopword_only(subject_)) return {};

        // prepositional phrases between the subject head and the verb
        prepositional_phrases(subject_end, main);
        if (main == n) return out_;

        std::size_t j = main;
        std::vector<std::string> group;
        while (j < n && (lexicon::is_auxiliary(toks_[j]) || toks_[j] == "not"))
            group.push_back(toks_[j++]);
        bool copula_only = !group.empty() && std::all_of(group.begin(), group.end(), [](auto& t) {
            return lexicon::is_copula(t);
        });
        if (j < n && lexicon::verb(toks_[j]) && !lexicon::is_auxiliary(toks_[j])) {
            group.push_back(toks_[j++]);
            copula_only = false;
        }

        std::string predicate = text::join(group);
        if (std::size_t plen = j < n ? lexicon::preposition_at(toks_, j) : 0; plen > 0) {
            std::string prep = text::join(Tokens(toks_.begin() + static_cast<std::ptrdiff_t>(j),
                                                 toks_.begin() + static_cast<std::ptrdiff_t>(j + plen)));
            predicate = copula_only ? prep : predicate + " " + prep;
            j += plen;
        } else if (copula_only && j < n && (toks_[j] == "a" || toks_[j] == "an")) {
            predicate += " a";
            ++j;
        }
        std::size_t object_end = next_preposition(toks_, j, n);
        emit(predicate, span_text(toks_, j, object_end));
        prepositional_phrases(object_end, n);
        return out_;
    }

private:
    void prepositional_phrases(std::size_t from, std::size_t limit) {
        std::size_t i = from;
        while (i < limit) {
            std::size_t plen = lexicon::preposition_at(toks_, i);
            if (plen == 0) {
                ++i;
                continue;
            }
            std::string prep = text::join(Tokens(toks_.begin() + static_cast<std::ptrdiff_t>(i),
                                                 toks_.begin() + static_cast<std::ptrdiff_t>(i + plen)));
            std::size_t end = next_preposition(toks_, i + plen, limit);
            emit(prep, span_text(toks_, i + plen, end));
            i = end;
        }
    }

    void emit(const std::string& predicate, const std::string& object) {
        if (predicate.empty() || object.empty() || stopword_only(object)) return;
        Triplet t{subject_, predicate, object, modality_, sample_};
        if (std::none_of(out_.begin(), out_.end(), [&](const Triplet& o) { return o == t; }))
            out_.push_back(std::move(t));
    }

    const Tokens& toks_;
    Modality modality_;
    const std::string& sample_;
    std::string subject_;
    std::vector<Triplet> out_;
};

}  // namespace

std::vector<Triplet> RuleParser::parse(const Statement& s) const {
    std::vector<Triplet> out;
    std::string sentence;
    auto flush = [&] {
        Tokens toks = text::tokens(sentence);
        sentence.clear();
        Tokens clause;
        auto run_clause = [&] {
            if (clause.empty()) return;
            for (auto& t : ClauseParser(clause, s.modality, s.source_sample).run())
                if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(std::move(t));
            clause.clear();
        };
        for (auto& t : toks) {
            if (lexicon::is_conjunction_splitter(t)) {
                run_clause();
            } else {
                clause.push_back(t);
            }
        }
        run_clause();
    };
    for (char c : s.text) {
        if (text::is_terminal_punct(c)) {
            flush();
        } else {
            sentence.push_back(c);
        }
    }
    flush();
    return out;
}

std::vector<Triplet> parse_statement(const Statement& s) { return RuleParser{}.parse(s); }

bool is_prepositional(const std::string& predicate) {
    return lexicon::is_preposition_phrase(predicate);
}

std::string subject_phrase(const std::string& subject) {
    auto toks = text::tokens(subject);
    if (!toks.empty() && text::is_person_like(toks.front())) return subject;
    return "the " + subject;
}

RealizedSentence realize(const Triplet& t) {
    std::string predicate = t.predicate;
    if (is_prepositional(predicate)) {
        predicate = "is " + predicate;
    } else if (predicate.ends_with(" a") || predicate.ends_with(" an")) {
        predicate = predicate.substr(0, predicate.rfind(' '));
        char first = t.object.empty() ? 'x' : t.object.front();
        bool vowel = first == 'a' || first == 'e' || first == 'i' || first == 'o' || first == 'u';
        predicate += vowel ? " an" : " a";
    }
    std::string body = subject_phrase(t.subject) + " " + predicate + " " + t.object;
    return {text::sentence_case(body) + ".", t};
}

}  // namespace svo
}  // namespace mqag
