#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mqag::text {

std::string lower(std::string_view s);
std::string trim(std::string_view s);
std::string collapse_spaces(std::string_view s);

// Whitespace split, punctuation stripped from both ends of every piece.
// Case is preserved; empty pieces are dropped.
std::vector<std::string> words(std::string_view s);

// Lowercased words() output. Internal apostrophes, digits and underscores
// survive ("person1", "brass_instrument", "don't").
std::vector<std::string> tokens(std::string_view s);

// tokens() minus stopwords.
std::vector<std::string> content_tokens(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep = " ");

bool is_stopword(std::string_view lower_token);

// "person1", "person12", ... (VCR object-tag placeholders).
bool is_person_tag(std::string_view lower_token);

// person tag or a personal pronoun
bool is_person_like(std::string_view lower_token);

bool is_terminal_punct(char c);

// Upper-cases the first alphabetic character.
std::string sentence_case(std::string_view s);

// Trims, collapses whitespace, sentence-cases and leaves exactly one terminal
// mark. An existing terminal ".", "!" or "?" is kept, otherwise "." is added.
std::string normalize_sentence(std::string_view s);

// Comparison key: lowercase tokens without articles, joined by single spaces
// (drops punctuation, case and article differences).
std::string comparison_key(std::string_view s);

// Lowercase, whitespace collapsed, spaces -> underscores.
std::string kb_concept(std::string_view s);

// Inverse of kb_concept for display: underscores -> spaces.
std::string display_concept(std::string_view s);

std::uint32_t fnv1a32(std::string_view bytes);
std::uint64_t fnv1a64(std::string_view bytes);

// splitmix64 output for state x (gamma step plus finalizer); used wherever a seed has to be spread over 64 bits.
std::uint64_t mix64(std::uint64_t x);

}  // namespace mqag::text
