#include "mqag/select.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mqag::select {

scorers::ImageRef image_of(const SampleRecord& rec) { return {rec.image_id, rec.object_tags}; }

std::vector<RelevanceScore> rank_triplets(const std::vector<Triplet>& triplets,
                                          const std::string& textual_statement,
                                          const scorers::ImageRef& image, const scorers::Providers& p) {
    std::vector<RelevanceScore> out;
    if (triplets.empty()) return out;
    auto statement = p.encoder->embed(textual_statement);
    for (const auto& t : triplets) {
        RelevanceScore r;
        r.triplet = t;
        r.sentence = svo::realize(t).text;
        r.text_term = std::abs(scorers::cosine(p.encoder->embed(r.sentence), statement));
        r.image_term = std::abs(p.image_text->score(image, r.sentence));
        r.total = r.text_term + r.image_term;
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(), [](const RelevanceScore& a, const RelevanceScore& b) {
        if (a.total != b.total) return a.total > b.total;
        int ma = modality_rank(a.triplet.modality), mb = modality_rank(b.triplet.modality);
        if (ma != mb) return ma < mb;
        if (a.sentence != b.sentence) return a.sentence < b.sentence;
        return a.triplet.key() < b.triplet.key();
    });
    return out;
}

std::vector<RelevanceScore> rank_triplets(const graph::MultimodalGraph& g, const SampleRecord& rec,
                                          const scorers::Providers& p) {
    if (g.edges.empty()) return {};
    auto statement = corpus::build_textual_statement(rec);
    return rank_triplets(graph::triplets(g), statement.text, image_of(rec), p);
}

std::map<Modality, RelevanceScore> pick_per_modality(const std::vector<RelevanceScore>& ranked) {
    std::map<Modality, RelevanceScore> picked;
    std::set<std::tuple<std::string, std::string, std::string>> taken;
    for (auto m : kAllModalities) {
        for (const auto& r : ranked) {
            if (r.triplet.modality != m || taken.contains(r.triplet.key())) continue;
            taken.insert(r.triplet.key());
            picked.emplace(m, r);
            break;
        }
    }
    return picked;
}

nlohmann::json to_json(const RelevanceScore& r) {
    return {{"triplet", r.triplet},
            {"modality", std::string(to_string(r.triplet.modality))},
            {"sentence", r.sentence},
            {"text_term", r.text_term},
            {"image_term", r.image_term},
            {"total", r.total}};
}

}  // namespace mqag::select
