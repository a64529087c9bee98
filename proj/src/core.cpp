#include "mqag/core.hpp"

namespace mqag {

std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::Vision: return "vision";
        case Modality::Text: return "text";
        case Modality::BackgroundKnowledge: return "background_knowledge";
    }
    return "?";
}

std::string_view to_string(QuestionType t) {
    switch (t) {
        case QuestionType::Explanation: return "explanation";
        case QuestionType::Activity: return "activity";
        case QuestionType::Scene: return "scene";
        case QuestionType::Mental: return "mental";
        case QuestionType::Hypothetical: return "hypothetical";
        case QuestionType::Temporal: return "temporal";
        case QuestionType::Role: return "role";
    }
    return "?";
}

std::string_view to_string(Slot s) {
    switch (s) {
        case Slot::Subject: return "subject";
        case Slot::Predicate: return "predicate";
        case Slot::Object: return "object";
    }
    return "?";
}

std::string_view to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::AbsentCaption: return "AbsentCaption";
        case ErrorCode::InvalidPrompt: return "InvalidPrompt";
        case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
        case ErrorCode::InsufficientDistractors: return "InsufficientDistractors";
        case ErrorCode::Transport: return "TransportError";
        case ErrorCode::InvalidInput: return "InvalidInput";
        case ErrorCode::Io: return "IoError";
    }
    return "?";
}

std::optional<Modality> parse_modality(std::string_view s) {
    if (s == "vision" || s == "v" || s == "V") return Modality::Vision;
    if (s == "text" || s == "t" || s == "T") return Modality::Text;
    if (s == "background_knowledge" || s == "bk" || s == "BK") return Modality::BackgroundKnowledge;
    return std::nullopt;
}

std::optional<QuestionType> parse_question_type(std::string_view s) {
    for (auto t : {QuestionType::Explanation, QuestionType::Activity, QuestionType::Scene,
                   QuestionType::Mental, QuestionType::Hypothetical, QuestionType::Temporal,
                   QuestionType::Role})
        if (to_string(t) == s) return t;
    return std::nullopt;
}

std::optional<Slot> parse_slot(std::string_view s) {
    for (auto slot : {Slot::Subject, Slot::Predicate, Slot::Object})
        if (to_string(slot) == s) return slot;
    return std::nullopt;
}

std::string_view modality_code(Modality m) {
    switch (m) {
        case Modality::Vision: return "v";
        case Modality::Text: return "t";
        case Modality::BackgroundKnowledge: return "bk";
    }
    return "?";
}

int modality_rank(Modality m) { return static_cast<int>(m); }

}  // namespace mqag
