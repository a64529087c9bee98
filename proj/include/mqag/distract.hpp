#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mqag/core.hpp"
#include "mqag/scorers.hpp"
#include "mqag/svo.hpp"

namespace mqag::distract {

enum class Source { ExplicitKb, ImplicitMaskFill, Realizer };

std::string_view to_string(Source s);

struct DistractorCandidate {
    std::string text;
    std::string replacement;  // the concept substituted into the asked slot
    Source source = Source::ExplicitKb;
    std::optional<double> sim_to_answer;
    std::optional<double> image_rel;
};

inline constexpr std::size_t kDefaultBudget = 8;
inline constexpr std::size_t kMinBudget = 6;

/// Replacement concepts for the asked slot come from knowledge-base neighbors
/// over the distractor pool and, for the Object slot when those run short,
/// from mask filling. Every substituted triplet is realized twice (rule
/// realizer and concept realizer). Candidates equal to the correct answer and
/// duplicates are removed; the rest are sorted by (source, text) and cut to
/// `budget`.
///
/// Throws Error(InvalidInput) for budget < 6 and Error(EmptyCandidateSet) when
/// nothing survives.
std::vector<DistractorCandidate> gen_candidates(const Triplet& t, Slot slot, const std::string& correct,
                                                std::size_t budget, const scorers::Providers& p);

// Keys under which a slot concept is looked up in the knowledge store, most
// specific first.
std::vector<std::string> lookup_keys(const std::string& part, Slot slot);

std::string mask_prompt(const Triplet& t);

}  // namespace mqag::distract
