#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mqag/corpus.hpp"
#include "mqag/graph.hpp"
#include "mqag/scorers.hpp"

namespace mqag::select {

struct RelevanceScore {
    Triplet triplet;
    std::string sentence;    // realized triplet
    double text_term = 0.0;  // |sim_s(sentence, textual statement)|
    double image_term = 0.0; // |rel_s(sentence, image)|
    double total = 0.0;
};

scorers::ImageRef image_of(const SampleRecord& rec);

// Descending total; ties by modality (vision, text, background knowledge)
// then sentence.
std::vector<RelevanceScore> rank_triplets(const graph::MultimodalGraph& g, const SampleRecord& rec,
                                          const scorers::Providers& p);

std::vector<RelevanceScore> rank_triplets(const std::vector<Triplet>& triplets,
                                          const std::string& textual_statement,
                                          const scorers::ImageRef& image, const scorers::Providers& p);

// Best triplet per modality. A triplet already taken by an earlier modality is
// skipped and the next one of the later modality is used instead.
std::map<Modality, RelevanceScore> pick_per_modality(const std::vector<RelevanceScore>& ranked);

nlohmann::json to_json(const RelevanceScore& r);

}  // namespace mqag::select
