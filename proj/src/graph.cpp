#include "mqag/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "mqag/text.hpp"

namespace mqag::graph {

void MergeConfig::validate() const {
    if (std::isnan(node_threshold) || node_threshold == -std::numeric_limits<double>::infinity())
        throw Error(ErrorCode::InvalidInput, "node_threshold must be a number");
}

static std::string normalize_term(const std::string& s) {
    return text::collapse_spaces(text::lower(text::trim(s)));
}

DomainGraph build_domain_graph(const std::vector<Triplet>& triplets, Modality modality) {
    DomainGraph g;
    g.modality = modality;
    std::map<std::string, int> ids;
    auto node = [&](const std::string& raw) {
        auto term = normalize_term(raw);
        auto [it, fresh] = ids.emplace(term, static_cast<int>(g.nodes.size()));
        if (fresh) g.nodes.push_back({it->second, term, {modality}});
        return it->second;
    };
    for (const auto& t : triplets) {
        if (normalize_term(t.subject) == normalize_term(t.object)) continue;
        int s = node(t.subject);
        int o = node(t.object);
        GraphEdge e{s, normalize_term(t.predicate), o, modality};
        if (std::find(g.edges.begin(), g.edges.end(), e) == g.edges.end()) g.edges.push_back(e);
    }
    return g;
}

Triplet edge_triplet(const std::vector<GraphNode>& nodes, const GraphEdge& e) {
    return Triplet{nodes.at(e.src).term, e.predicate, nodes.at(e.dst).term, e.modality, {}};
}

NodeContext context_of(const std::vector<GraphNode>& nodes, const std::vector<GraphEdge>& edges,
                       int node_id) {
    NodeContext ctx{nodes.at(node_id).term, {}};
    for (const auto& e : edges)
        if (e.src == node_id || e.dst == node_id)
            ctx.sentences.push_back(svo::realize(edge_triplet(nodes, e)).text);
    return ctx;
}

double concept_similarity(const scorers::Providers& p, const std::string& a, const std::string& b) {
    if (p.store) return p.store->concept_similarity(text::kb_concept(a), text::kb_concept(b));
    return text::kb_concept(a) == text::kb_concept(b) ? 1.0 : 0.0;
}

// Summing the sorted products keeps the result independent of argument order.
static double context_term(const std::vector<scorers::Embedding>& a,
                           const std::vector<scorers::Embedding>& b) {
    if (a.empty() || b.empty()) return 0.0;
    std::vector<double> sims;
    sims.reserve(a.size() * b.size());
    for (const auto& x : a)
        for (const auto& y : b) sims.push_back(scorers::cosine(x, y));
    std::sort(sims.begin(), sims.end());
    double sum = 0.0;
    for (double s : sims) sum += s;
    return sum / static_cast<double>(a.size() * b.size());
}

double score_node_pair(const NodeContext& a, const NodeContext& b, const scorers::Providers& p) {
    auto embed_all = [&](const NodeContext& c) {
        std::vector<scorers::Embedding> out;
        for (const auto& s : c.sentences) out.push_back(p.encoder->embed(s));
        return out;
    };
    return concept_similarity(p, a.term, b.term) + context_term(embed_all(a), embed_all(b));
}

namespace {

struct Working {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
};

struct ScoredPair {
    int a = 0;
    int b = 0;
    double raw = 0.0;
    double z = 0.0;
};

class EmbeddingMemo {
public:
    explicit EmbeddingMemo(const scorers::Providers& p) : p_(p) {}

    std::vector<scorers::Embedding> of(const NodeContext& ctx) {
        std::vector<scorers::Embedding> out;
        for (const auto& s : ctx.sentences) {
            auto it = memo_.find(s);
            if (it == memo_.end()) it = memo_.emplace(s, p_.encoder->embed(s)).first;
            out.push_back(it->second);
        }
        return out;
    }

private:
    const scorers::Providers& p_;
    std::unordered_map<std::string, scorers::Embedding> memo_;
};

void merge_into(Working& acc, const DomainGraph& g, const MergeConfig& cfg, const scorers::Providers& p,
                MultimodalGraph& out) {
    EmbeddingMemo memo(p);
    std::vector<std::vector<scorers::Embedding>> ea, eb;
    for (const auto& n : acc.nodes) ea.push_back(memo.of(context_of(acc.nodes, acc.edges, n.node_id)));
    for (const auto& n : g.nodes) eb.push_back(memo.of(context_of(g.nodes, g.edges, n.node_id)));

    std::vector<ScoredPair> pairs;
    for (const auto& na : acc.nodes)
        for (const auto& nb : g.nodes) {
            double raw = concept_similarity(p, na.term, nb.term) +
                         context_term(ea[static_cast<std::size_t>(na.node_id)],
                                      eb[static_cast<std::size_t>(nb.node_id)]);
            pairs.push_back({na.node_id, nb.node_id, raw, raw});
        }

    MergeBatch batch;
    batch.pairs = pairs.size();
    if (!pairs.empty()) {
        double sum = 0.0;
        for (const auto& s : pairs) sum += s.raw;
        batch.mean = sum / static_cast<double>(pairs.size());
        double var = 0.0;
        for (const auto& s : pairs) var += (s.raw - batch.mean) * (s.raw - batch.mean);
        batch.stddev = std::sqrt(var / static_cast<double>(pairs.size()));
    }
    if (cfg.zscore && pairs.size() >= 2) {
        for (auto& s : pairs) s.z = batch.stddev > 0.0 ? (s.raw - batch.mean) / batch.stddev : 0.0;
    } else {
        batch.raw_fallback = cfg.zscore;
    }
    out.batches.push_back(batch);

    std::vector<ScoredPair> hits;
    for (const auto& s : pairs)
        if (s.z >= cfg.node_threshold) hits.push_back(s);
    std::sort(hits.begin(), hits.end(), [](const ScoredPair& x, const ScoredPair& y) {
        if (x.z != y.z) return x.z > y.z;
        if (x.a != y.a) return x.a < y.a;
        return x.b < y.b;
    });

    std::vector<int> redirect(g.nodes.size(), -1);
    std::vector<bool> kept_used(acc.nodes.size(), false);
    for (const auto& h : hits) {
        auto b = static_cast<std::size_t>(h.b);
        auto a = static_cast<std::size_t>(h.a);
        if (redirect[b] != -1 || kept_used[a]) continue;
        redirect[b] = h.a;
        kept_used[a] = true;
        acc.nodes[a].modalities.insert(g.nodes[b].modalities.begin(), g.nodes[b].modalities.end());
        out.merge_log.push_back({h.a, h.b, acc.nodes[a].term, g.nodes[b].term, h.raw, h.z});
    }
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (redirect[i] != -1) continue;
        redirect[i] = static_cast<int>(acc.nodes.size());
        auto n = g.nodes[i];
        n.node_id = redirect[i];
        acc.nodes.push_back(std::move(n));
    }
    for (const auto& e : g.edges) {
        GraphEdge moved{redirect[static_cast<std::size_t>(e.src)], e.predicate,
                        redirect[static_cast<std::size_t>(e.dst)], e.modality};
        if (moved.src == moved.dst) continue;
        if (std::find(acc.edges.begin(), acc.edges.end(), moved) == acc.edges.end())
            acc.edges.push_back(std::move(moved));
    }
}

}  // namespace

MultimodalGraph merge(const std::vector<DomainGraph>& graphs, const MergeConfig& cfg,
                      const scorers::Providers& p) {
    if (graphs.size() < 2) throw Error(ErrorCode::InvalidInput, "merge needs at least two graphs");
    cfg.validate();
    MultimodalGraph out;
    Working acc{graphs.front().nodes, graphs.front().edges};
    for (std::size_t i = 1; i < graphs.size(); ++i) merge_into(acc, graphs[i], cfg, p, out);
    out.nodes = std::move(acc.nodes);
    out.edges = std::move(acc.edges);
    return out;
}

std::vector<Triplet> triplets(const MultimodalGraph& g) {
    std::vector<Triplet> out;
    out.reserve(g.edges.size());
    for (const auto& e : g.edges) out.push_back(edge_triplet(g.nodes, e));
    return out;
}

nlohmann::json to_json(const MultimodalGraph& g) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : g.nodes) {
        nlohmann::json mods = nlohmann::json::array();
        for (auto m : n.modalities) mods.push_back(std::string(to_string(m)));
        nodes.push_back({{"id", n.node_id}, {"concept", n.term}, {"modalities", mods}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : g.edges)
        edges.push_back({{"src", e.src}, {"predicate", e.predicate}, {"dst", e.dst},
                         {"modality", std::string(to_string(e.modality))}});
    nlohmann::json log = nlohmann::json::array();
    for (const auto& m : g.merge_log)
        log.push_back({{"kept", m.kept}, {"absorbed", m.absorbed}, {"kept_concept", m.kept_term},
                       {"absorbed_concept", m.absorbed_term}, {"raw", m.raw}, {"z", m.z}});
    nlohmann::json batches = nlohmann::json::array();
    for (const auto& b : g.batches)
        batches.push_back({{"pairs", b.pairs}, {"mean", b.mean}, {"stddev", b.stddev},
                           {"raw_fallback", b.raw_fallback}});
    return {{"nodes", nodes}, {"edges", edges}, {"merge_log", log}, {"batches", batches}};
}

}  // namespace mqag::graph
