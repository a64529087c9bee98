#pragma once

#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "mqag/core.hpp"
#include "mqag/corpus.hpp"

namespace mqag {

/// (Subject, Predicate, Object). Parts are lowercase with determiners
/// stripped; the modality records which domain graph produced it.
struct Triplet {
    std::string subject;
    std::string predicate;
    std::string object;
    Modality modality = Modality::Text;
    std::string source_sample;

    // Identity used for de-duplication across modalities.
    std::tuple<std::string, std::string, std::string> key() const {
        return {subject, predicate, object};
    }
    bool same_fact(const Triplet& o) const { return key() == o.key(); }
    bool operator==(const Triplet&) const = default;
};

struct RealizedSentence {
    std::string text;
    Triplet source;
};

void to_json(nlohmann::json& j, const Triplet& t);  // {s, p, o}

namespace svo {

// Statement -> triplets. Implementations must be thread-safe.
class StatementParser {
public:
    virtual ~StatementParser() = default;
    virtual std::vector<Triplet> parse(const Statement& s) const = 0;
    virtual std::string name() const = 0;
};

/// Deterministic rule grammar ("rule-v1").
///
/// Per clause (clauses split on "because"/"so"): the subject is the span
/// before the first verb group or preposition; the predicate is the verb
/// group, or the preposition when the verb group is a bare copula; the object
/// runs to the next preposition. Every later prepositional phrase yields an
/// extra (subject, preposition, phrase) triplet. Determiners are stripped and
/// triplets whose subject or object is stopword-only are discarded.
class RuleParser final : public StatementParser {
public:
    std::vector<Triplet> parse(const Statement& s) const override;
    std::string name() const override { return "rule-v1"; }
};

std::vector<Triplet> parse_statement(const Statement& s);

// "X is P O" for prepositional predicates, "X P O" otherwise. Subjects other
// than person tags and pronouns get "The".
RealizedSentence realize(const Triplet& t);

// Subject as it appears inside a sentence ("the boy", "person1").
std::string subject_phrase(const std::string& subject);

bool is_prepositional(const std::string& predicate);

}  // namespace svo
}  // namespace mqag
