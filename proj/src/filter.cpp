#include "mqag/filter.hpp"

#include <algorithm>
#include <set>

#include "mqag/select.hpp"
#include "mqag/text.hpp"

namespace mqag::filter {

void FilterConfig::validate() const {
    if (!(similarity_cutoff > 0.0 && similarity_cutoff <= 1.0))
        throw Error(ErrorCode::InvalidInput, "similarity_cutoff must be in (0, 1]");
    if (final_count < 1) throw Error(ErrorCode::InvalidInput, "final_count must be >= 1");
}

std::uint64_t splitmix_next(std::uint64_t& state) {
    const std::uint64_t x = state;
    state += 0x9e3779b97f4a7c15ULL;
    return text::mix64(x);
}

SubQuestion filter_and_assemble(std::vector<distract::DistractorCandidate> candidates, const std::string& correct,
                                const SampleRecord& rec, const std::string& stem, const QuestionMeta& meta,
                                const FilterConfig& cfg, const scorers::Providers& p, FilterTrace* trace) {
    cfg.validate();
    FilterTrace local;
    local.input = candidates.size();

    const std::string correct_key = text::comparison_key(correct);
    std::set<std::string> seen{correct_key};
    std::vector<distract::DistractorCandidate> survivors;
    for (auto& c : candidates) {
        auto g = scorers::grammar_ok(p, c.text);
        if (!g.ok) {
            ++local.grammar_dropped;
            continue;
        }
        c.text = g.corrected;
        if (!seen.insert(text::comparison_key(c.text)).second) continue;
        survivors.push_back(std::move(c));
    }

    const std::string reference = cfg.compare_to == FilterConfig::CompareTo::TextualStatement
                                      ? corpus::build_textual_statement(rec).text
                                      : correct;
    auto ref = p.encoder->embed(reference);
    std::vector<distract::DistractorCandidate> close_enough;
    for (auto& c : survivors) {
        c.sim_to_answer = scorers::cosine(p.encoder->embed(c.text), ref);
        if (*c.sim_to_answer > cfg.similarity_cutoff) {
            ++local.similarity_dropped;
            continue;
        }
        close_enough.push_back(std::move(c));
    }

    auto image = select::image_of(rec);
    for (auto& c : close_enough) c.image_rel = scorers::image_text_score(p, image, c.text);
    std::stable_sort(close_enough.begin(), close_enough.end(),
                     [](const distract::DistractorCandidate& a, const distract::DistractorCandidate& b) {
                         if (*a.image_rel != *b.image_rel) return *a.image_rel > *b.image_rel;
                         return a.text < b.text;
                     });
    local.kept = std::min(close_enough.size(), static_cast<std::size_t>(cfg.final_count));
    if (trace) *trace = local;
    if (close_enough.size() < static_cast<std::size_t>(cfg.final_count))
        throw Error(ErrorCode::InsufficientDistractors,
                    meta.question_id + ": " + std::to_string(close_enough.size()) + " distractors survived, need " +
                        std::to_string(cfg.final_count));
    close_enough.resize(static_cast<std::size_t>(cfg.final_count));

    struct Choice {
        std::string text;
        const distract::DistractorCandidate* source;
    };
    std::vector<Choice> choices{{correct, nullptr}};
    for (const auto& c : close_enough) choices.push_back({c.text, &c});
    shuffle(choices, cfg.shuffle_seed);

    SubQuestion q;
    q.question_id = meta.question_id;
    q.sample_id = rec.sample_id;
    q.image_id = rec.image_id;
    q.modality = meta.modality;
    q.stem = stem;
    q.asked_slot = meta.slot;
    q.source_triplet = meta.triplet;
    q.provenance = meta.provenance;
    nlohmann::json sims = nlohmann::json::array(), rels = nlohmann::json::array(),
                   sources = nlohmann::json::array();
    for (std::size_t i = 0; i < choices.size(); ++i) {
        q.choices.push_back(choices[i].text);
        if (!choices[i].source) {
            q.label_index = static_cast<int>(i);
            sims.push_back(nullptr);
            rels.push_back(nullptr);
            sources.push_back(nullptr);
        } else {
            sims.push_back(*choices[i].source->sim_to_answer);
            rels.push_back(*choices[i].source->image_rel);
            sources.push_back(std::string(distract::to_string(choices[i].source->source)));
        }
    }
    q.provenance["distractor_similarity"] = sims;
    q.provenance["distractor_image_relevance"] = rels;
    q.provenance["distractor_source"] = sources;
    return q;
}

}  // namespace mqag::filter
