#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Embedded English lexicon used by the rule parser, the realizer and the
// offline grammar check. Everything here expects lowercase input.
namespace mqag::lexicon {

enum class VerbForm { Base, ThirdPerson, Gerund, Past, PastParticiple };

struct VerbInfo {
    std::string base;
    VerbForm form;
};

std::optional<VerbInfo> verb(std::string_view token);

bool is_copula(std::string_view token);  // is, are, was, were, am, be, been, being
bool is_modal(std::string_view token);   // can, could, will, ...
bool is_auxiliary(std::string_view token);  // copula, modal, do/does/did, has/have/had
bool is_determiner(std::string_view token);
bool is_conjunction_splitter(std::string_view token);  // because, so

// Any verb form, auxiliary or modal.
bool is_verbal(std::string_view token);

// Length (in tokens) of the longest preposition starting at tokens[i], 0 if none.
std::size_t preposition_at(std::span<const std::string> tokens, std::size_t i);

bool is_preposition_phrase(std::string_view phrase);

std::string third_person(std::string_view base);
std::string gerund(std::string_view base);
std::string past(std::string_view base);

// Verbs that read badly in the progressive ("has", "means", ...).
bool is_stative(std::string_view base);

}  // namespace mqag::lexicon
