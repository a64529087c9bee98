#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mqag/corpus.hpp"
#include "mqag/distract.hpp"
#include "mqag/qagen.hpp"
#include "mqag/scorers.hpp"

namespace mqag::filter {

struct FilterConfig {
    enum class CompareTo { TextualStatement, CorrectAnswer };

    double similarity_cutoff = 0.7;
    int final_count = 3;
    std::uint64_t shuffle_seed = 0;
    CompareTo compare_to = CompareTo::TextualStatement;

    void validate() const;
};

// Identity of the sub-question being assembled.
struct QuestionMeta {
    std::string question_id;
    Modality modality = Modality::Vision;
    Slot slot = Slot::Object;
    Triplet triplet;
    nlohmann::json provenance = nlohmann::json::object();
};

struct FilterTrace {
    std::size_t input = 0;
    std::size_t grammar_dropped = 0;
    std::size_t similarity_dropped = 0;
    std::size_t kept = 0;
};

/// grammar check and correction, then drop candidates whose similarity to the
/// textual statement exceeds the cutoff, then keep the final_count most
/// image-relevant (ties lexicographic), then shuffle them with the correct
/// answer. Throws Error(InsufficientDistractors) when fewer than final_count
/// survive.
SubQuestion filter_and_assemble(std::vector<distract::DistractorCandidate> candidates, const std::string& correct,
                                const SampleRecord& rec, const std::string& stem, const QuestionMeta& meta,
                                const FilterConfig& cfg, const scorers::Providers& p,
                                FilterTrace* trace = nullptr);

// In-place Fisher-Yates driven by splitmix64, identical on every platform.
template <typename T>
void shuffle(std::vector<T>& v, std::uint64_t seed);

std::uint64_t splitmix_next(std::uint64_t& state);

template <typename T>
void shuffle(std::vector<T>& v, std::uint64_t seed) {
    std::uint64_t state = seed;
    for (std::size_t i = v.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(splitmix_next(state) % i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace mqag::filter
