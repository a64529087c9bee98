#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mqag/core.hpp"
#include "mqag/svo.hpp"

namespace mqag {

struct SubQuestion {
    std::string question_id;  // <sample_id>-<v|t|bk>
    std::string sample_id;
    std::string image_id;
    Modality modality = Modality::Vision;
    std::string stem;
    std::vector<std::string> choices;  // 4 for generated sub-questions
    int label_index = 0;
    Slot asked_slot = Slot::Object;
    Triplet source_triplet;
    nlohmann::json provenance = nlohmann::json::object();

    const std::string& answer() const { return choices.at(static_cast<std::size_t>(label_index)); }
};

void to_json(nlohmann::json& j, const SubQuestion& q);
SubQuestion subquestion_from_json(const nlohmann::json& j);

namespace qagen {

struct Draft {
    std::string stem;
    std::string answer;  // svo::realize(triplet), whatever the slot
};

Draft make_question(const Triplet& t, Slot slot);

// Slots whose stem does not give away the asked part, in Subject, Predicate,
// Object order. Object is excluded when subject and object are both people.
std::vector<Slot> applicable_slots(const Triplet& t);

std::optional<Slot> choose_slot(const Triplet& t, std::uint64_t seed);

std::string question_id(const std::string& sample_id, Modality m);

std::uint64_t question_seed(const std::string& question_id, std::uint64_t config_seed);

}  // namespace qagen
}  // namespace mqag
