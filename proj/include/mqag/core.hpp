#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mqag {

enum class Modality { Vision, Text, BackgroundKnowledge };

inline constexpr std::array<Modality, 3> kAllModalities = {
    Modality::Vision, Modality::Text, Modality::BackgroundKnowledge};

enum class QuestionType { Explanation, Activity, Scene, Mental, Hypothetical, Temporal, Role };

enum class Slot { Subject, Predicate, Object };

std::string_view to_string(Modality m);
std::string_view to_string(QuestionType t);
std::string_view to_string(Slot s);

// Accepts the canonical names ("vision", "text", "background_knowledge") and
// the short codes used in question ids ("v", "t", "bk").
std::optional<Modality> parse_modality(std::string_view s);
std::optional<QuestionType> parse_question_type(std::string_view s);
std::optional<Slot> parse_slot(std::string_view s);

std::string_view modality_code(Modality m);  // "v", "t", "bk"
int modality_rank(Modality m);               // V < T < BK

enum class ErrorCode {
    AbsentCaption,
    InvalidPrompt,
    EmptyCandidateSet,
    InsufficientDistractors,
    Transport,
    InvalidInput,
    Io,
};

std::string_view to_string(ErrorCode c);

// Single exception type for the pipeline; callers switch on code() to decide
// whether a sample is dropped, retried or the run aborts.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    bool retryable() const noexcept { return code_ == ErrorCode::Transport; }

private:
    ErrorCode code_;
};

}  // namespace mqag
