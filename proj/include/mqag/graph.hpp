#pragma once

#include <limits>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mqag/core.hpp"
#include "mqag/scorers.hpp"
#include "mqag/svo.hpp"

namespace mqag::graph {

struct GraphNode {
    int node_id = 0;
    std::string term;  // normalized concept
    std::set<Modality> modalities;

    bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
    int src = 0;
    std::string predicate;
    int dst = 0;
    Modality modality = Modality::Text;  // provenance survives merging

    bool operator==(const GraphEdge&) const = default;
};

// Node ids equal their index in `nodes`.
struct DomainGraph {
    Modality modality = Modality::Text;
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
};

struct MergeLogEntry {
    int kept = 0;      // node id in the merged graph
    int absorbed = 0;  // node id in the graph being merged in
    std::string kept_term;
    std::string absorbed_term;
    double raw = 0.0;
    double z = 0.0;
};

struct MergeBatch {
    std::size_t pairs = 0;
    double mean = 0.0;
    double stddev = 0.0;
    bool raw_fallback = false;  // fewer than two pairs: thresholds applied to raw scores
};

struct MultimodalGraph {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
    std::vector<MergeLogEntry> merge_log;
    std::vector<MergeBatch> batches;
};

struct MergeConfig {
    double node_threshold = 0.8;
    bool zscore = true;

    void validate() const;
};

DomainGraph build_domain_graph(const std::vector<Triplet>& triplets, Modality modality);

// A node together with the sentences realizing its one-hop edges.
struct NodeContext {
    std::string term;
    std::vector<std::string> sentences;
};

NodeContext context_of(const std::vector<GraphNode>& nodes, const std::vector<GraphEdge>& edges,
                       int node_id);

Triplet edge_triplet(const std::vector<GraphNode>& nodes, const GraphEdge& e);

/// sim_c(a, b) + sum over all sentence pairs of sim_s / (p * q); the context
/// term is 0 when either side has no edges. sim_c comes from the knowledge
/// store taxonomy (exact match only when no store is attached).
double score_node_pair(const NodeContext& a, const NodeContext& b, const scorers::Providers& p);

double concept_similarity(const scorers::Providers& p, const std::string& a, const std::string& b);

// Folds the graphs left to right; callers pass them in Vision, Text,
// Background-knowledge order. Throws Error(InvalidInput) for fewer than two.
MultimodalGraph merge(const std::vector<DomainGraph>& graphs, const MergeConfig& cfg,
                      const scorers::Providers& p);

std::vector<Triplet> triplets(const MultimodalGraph& g);

nlohmann::json to_json(const MultimodalGraph& g);

}  // namespace mqag::graph
