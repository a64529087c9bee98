#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mqag/core.hpp"

namespace mqag {

/// One image-question-answer unit of the input corpus.
struct SampleRecord {
    std::string sample_id;
    std::string image_id;
    std::string question_text;
    std::vector<std::string> answer_choices;  // exactly 4
    int label_index = 0;
    std::optional<std::string> rationale_text;
    QuestionType question_type = QuestionType::Explanation;
    std::optional<std::string> caption;
    std::vector<std::string> object_tags;

    const std::string& correct_answer() const { return answer_choices.at(label_index); }

    bool operator==(const SampleRecord&) const = default;
};

struct Statement {
    std::string text;
    Modality modality = Modality::Text;
    std::string source_sample;

    bool operator==(const Statement&) const = default;
};

struct Keyword {
    std::string term;
    double score = 0.0;
};

struct KeywordSet {
    std::vector<Keyword> keywords;  // descending score, ties lexicographic

    bool empty() const { return keywords.empty(); }
    bool contains(std::string_view term) const;
};

void to_json(nlohmann::json& j, const SampleRecord& r);

// Throws std::invalid_argument naming the offending field.
SampleRecord sample_from_json(const nlohmann::json& j);

namespace corpus {

enum class Format { Jsonl };

struct LineError {
    std::size_t line = 0;  // 1-based
    std::string field;
    std::string message;
};

struct LoadResult {
    std::vector<SampleRecord> records;
    std::vector<LineError> errors;

    bool ok() const { return errors.empty(); }
};

// Blank lines are skipped. Malformed lines are reported and skipped; I/O
// failure throws Error(Io).
LoadResult load_corpus(const std::filesystem::path& path, Format format = Format::Jsonl);

std::string serialize(const SampleRecord& r);  // one JSONL line, no newline

Statement build_visual_statement(const SampleRecord& rec);
Statement build_textual_statement(const SampleRecord& rec);

inline constexpr std::size_t kDefaultKeywordCount = 3;

KeywordSet extract_keywords(const std::vector<Statement>& statements,
                            std::size_t k = kDefaultKeywordCount);

}  // namespace corpus
}  // namespace mqag
