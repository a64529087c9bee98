#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mqag::kb {

enum class Relation : std::uint16_t {
    RelatedTo, FormOf, IsA, PartOf, HasA, UsedFor, CapableOf, AtLocation, Causes, HasSubevent,
    HasFirstSubevent, HasLastSubevent, HasPrerequisite, HasProperty, MotivatedByGoal,
    ObstructedBy, Desires, CreatedBy, Synonym, Antonym, DistinctFrom, DerivedFrom, SymbolOf,
    DefinedAs, MannerOf, LocatedNear, HasContext, SimilarTo, EtymologicallyRelatedTo,
    EtymologicallyDerivedFrom, CausesDesire, MadeOf, ReceivesAction, NotDesires, InstanceOf,
    Entails,
};

std::string_view relation_name(Relation r);

// Accepts "IsA" and "/r/IsA".
std::optional<Relation> parse_relation(std::string_view name);

// Verb phrase used when a knowledge edge becomes a triplet predicate
// (IsA -> "is a", UsedFor -> "is used for").
std::string_view relation_phrase(Relation r);

struct KnowledgeEdge {
    std::string subject;  // normalized concept (lowercase, underscores)
    Relation relation = Relation::RelatedTo;
    std::string object;
    double weight = 1.0;

    bool operator==(const KnowledgeEdge&) const = default;
};

struct RelationPool {
    std::string name;
    std::set<Relation> relations;

    bool contains(Relation r) const { return relations.contains(r); }
};

// The 20 hand-selected background-knowledge relations.
const RelationPool& bk_pool();
// Relations that yield plausible-but-wrong replacement concepts.
const RelationPool& distractor_pool();

std::optional<RelationPool> pool_by_name(std::string_view name);

// Lowercase, spaces -> underscores, ConceptNet URI prefix and POS suffix
// stripped ("/c/en/brass_instrument/n" -> "brass_instrument").
std::string normalize_concept(std::string_view raw);

struct IngestStats {
    std::size_t lines = 0;             // non-blank, non-comment lines
    std::size_t added = 0;
    std::size_t merged = 0;            // duplicates folded into an existing edge
    std::size_t unknown_relation = 0;  // skipped, counted
    std::size_t malformed = 0;         // skipped, counted

    std::size_t skipped() const { return unknown_relation + malformed; }
};

inline constexpr std::size_t kMaxSimilarityDepth = 6;

/// In-memory view of a ConceptNet-style edge set.
///
/// On disk a store is a compacted binary file (see docs/kb_store_format.md)
/// plus an optional append log `<store>.log`; open() replays the log. A store
/// is read-concurrent once loading finishes; mutation is single-writer.
class KnowledgeStore {
public:
    KnowledgeStore() = default;

    // Adds or folds a duplicate (same subject, relation, object) keeping the
    // larger weight. Returns true when the edge is new.
    bool add(KnowledgeEdge edge);

    IngestStats ingest_tsv(const std::filesystem::path& tsv);

    void save(const std::filesystem::path& store) const;
    static KnowledgeStore open(const std::filesystem::path& store);

    // Appends to `<store>.log` without rewriting the compacted file.
    static void append_log(const std::filesystem::path& store, const std::vector<KnowledgeEdge>& edges);

    // Edges touching `term` whose relation is in `pool` (all of them when
    // limit is 0), weight descending
    // then (subject, relation name, object) ascending.
    std::vector<KnowledgeEdge> neighbors(std::string_view term, const RelationPool& pool,
                                         std::size_t limit) const;

    // 1 / (1 + d), d = shortest undirected path over IsA/Synonym/PartOf edges,
    // 0 when no path of length <= 6 exists; 1 for equal normalized concepts.
    double concept_similarity(std::string_view a, std::string_view b) const;

    bool has_concept(std::string_view term) const;
    std::size_t size() const { return edges_.size(); }
    const std::vector<KnowledgeEdge>& edges() const { return edges_; }

private:
    struct Key {
        std::string subject;
        Relation relation;
        std::string object;
        auto operator<=>(const Key&) const = default;
    };

    std::vector<KnowledgeEdge> edges_;
    std::map<Key, std::size_t> by_key_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_concept_;
};

}  // namespace mqag::kb
