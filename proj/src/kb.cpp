#include "mqag/kb.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <deque>
#include <fstream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "mqag/core.hpp"
#include "mqag/text.hpp"

namespace mqag::kb {

static_assert(std::endian::native == std::endian::little,
              "store files are written in host order and documented as little-endian");

namespace {

struct RelationInfo {
    Relation relation;
    std::string_view name;
    std::string_view phrase;
};

constexpr RelationInfo kRelations[] = {
    {Relation::RelatedTo, "RelatedTo", "relates to"},
    {Relation::FormOf, "FormOf", "is a form of"},
    {Relation::IsA, "IsA", "is a"},
    {Relation::PartOf, "PartOf", "belongs to"},
    {Relation::HasA, "HasA", "has"},
    {Relation::UsedFor, "UsedFor", "is used for"},
    {Relation::CapableOf, "CapableOf", "can"},
    {Relation::AtLocation, "AtLocation", "is located in"},
    {Relation::Causes, "Causes", "causes"},
    {Relation::HasSubevent, "HasSubevent", "involves"},
    {Relation::HasFirstSubevent, "HasFirstSubevent", "starts with"},
    {Relation::HasLastSubevent, "HasLastSubevent", "ends with"},
    {Relation::HasPrerequisite, "HasPrerequisite", "requires"},
    {Relation::HasProperty, "HasProperty", "is"},
    {Relation::MotivatedByGoal, "MotivatedByGoal", "is motivated by"},
    {Relation::ObstructedBy, "ObstructedBy", "is obstructed by"},
    {Relation::Desires, "Desires", "wants"},
    {Relation::CreatedBy, "CreatedBy", "is created by"},
    {Relation::Synonym, "Synonym", "means"},
    {Relation::Antonym, "Antonym", "contrasts with"},
    {Relation::DistinctFrom, "DistinctFrom", "differs from"},
    {Relation::DerivedFrom, "DerivedFrom", "derives from"},
    {Relation::SymbolOf, "SymbolOf", "symbolizes"},
    {Relation::DefinedAs, "DefinedAs", "is defined as"},
    {Relation::MannerOf, "MannerOf", "is a way of"},
    {Relation::LocatedNear, "LocatedNear", "near"},
    {Relation::HasContext, "HasContext", "is used in"},
    {Relation::SimilarTo, "SimilarTo", "resembles"},
    {Relation::EtymologicallyRelatedTo, "EtymologicallyRelatedTo", "relates to"},
    {Relation::EtymologicallyDerivedFrom, "EtymologicallyDerivedFrom", "derives from"},
    {Relation::CausesDesire, "CausesDesire", "makes people want"},
    {Relation::MadeOf, "MadeOf", "is made of"},
    {Relation::ReceivesAction, "ReceivesAction", "can be"},
    {Relation::NotDesires, "NotDesires", "does not want"},
    {Relation::InstanceOf, "InstanceOf", "is an instance of"},
    {Relation::Entails, "Entails", "entails"},
};

const RelationInfo& info(Relation r) {
    for (const auto& i : kRelations)
        if (i.relation == r) return i;
    throw std::logic_error("unmapped relation");
}

bool is_taxonomic(Relation r) {
    return r == Relation::IsA || r == Relation::Synonym || r == Relation::PartOf;
}

constexpr char kStoreMagic[4] = {'M', 'Q', 'K', 'B'};
constexpr char kLogMagic[4] = {'M', 'Q', 'K', 'L'};
constexpr std::uint32_t kStoreVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, std::string_view s) {
    put(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& p) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw Error(ErrorCode::Io, "truncated store file " + p.string());
    return v;
}

std::string get_string(std::istream& in, const std::filesystem::path& p) {
    auto n = get<std::uint32_t>(in, p);
    std::string s(n, '\0');
    if (n && !in.read(s.data(), n)) throw Error(ErrorCode::Io, "truncated store file " + p.string());
    return s;
}

std::filesystem::path log_path(const std::filesystem::path& store) {
    auto p = store;
    p += ".log";
    return p;
}

bool edge_order(const KnowledgeEdge& a, const KnowledgeEdge& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.subject != b.subject) return a.subject < b.subject;
    auto an = relation_name(a.relation), bn = relation_name(b.relation);
    if (an != bn) return an < bn;
    return a.object < b.object;
}

}  // namespace

std::string_view relation_name(Relation r) { return info(r).name; }
std::string_view relation_phrase(Relation r) { return info(r).phrase; }

std::optional<Relation> parse_relation(std::string_view name) {
    if (name.starts_with("/r/")) name.remove_prefix(3);
    while (!name.empty() && name.back() == '/') name.remove_suffix(1);
    for (const auto& i : kRelations)
        if (i.name == name) return i.relation;
    return std::nullopt;
}

const RelationPool& bk_pool() {
    static const RelationPool pool{
        "bk",
        {Relation::PartOf, Relation::IsA, Relation::HasSubevent, Relation::Synonym,
         Relation::Antonym, Relation::MadeOf, Relation::DerivedFrom, Relation::DefinedAs,
         Relation::RelatedTo, Relation::UsedFor, Relation::CapableOf, Relation::AtLocation,
         Relation::Causes, Relation::HasProperty, Relation::Desires, Relation::CreatedBy,
         Relation::DistinctFrom, Relation::SymbolOf, Relation::LocatedNear, Relation::SimilarTo}};
    return pool;
}

const RelationPool& distractor_pool() {
    static const RelationPool pool{
        "distractor",
        {Relation::RelatedTo, Relation::Antonym, Relation::DistinctFrom, Relation::AtLocation,
         Relation::UsedFor, Relation::CapableOf, Relation::SimilarTo}};
    return pool;
}

std::optional<RelationPool> pool_by_name(std::string_view name) {
    if (name == "bk") return bk_pool();
    if (name == "distractor") return distractor_pool();
    return std::nullopt;
}

std::string normalize_concept(std::string_view raw) {
    std::string_view s = raw;
    if (s.starts_with("/c/")) {
        s.remove_prefix(3);
        auto lang_end = s.find('/');
        if (lang_end != std::string_view::npos) s.remove_prefix(lang_end + 1);
        auto pos_sep = s.find('/');
        if (pos_sep != std::string_view::npos) s = s.substr(0, pos_sep);
    }
    return text::kb_concept(s);
}

bool KnowledgeStore::add(KnowledgeEdge edge) {
    Key key{edge.subject, edge.relation, edge.object};
    if (auto it = by_key_.find(key); it != by_key_.end()) {
        auto& existing = edges_[it->second];
        existing.weight = std::max(existing.weight, edge.weight);
        return false;
    }
    std::size_t idx = edges_.size();
    by_key_.emplace(std::move(key), idx);
    by_concept_[edge.subject].push_back(idx);
    by_concept_[edge.object].push_back(idx);
    edges_.push_back(std::move(edge));
    return true;
}

IngestStats KnowledgeStore::ingest_tsv(const std::filesystem::path& tsv) {
    std::ifstream in(tsv);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + tsv.string());
    IngestStats stats;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (text::trim(line).empty() || line.front() == '#') continue;
        ++stats.lines;
        std::vector<std::string> cols;
        std::size_t start = 0;
        for (;;) {
            auto tab = line.find('\t', start);
            cols.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (cols.size() < 3 || cols.size() > 4) {
            ++stats.malformed;
            spdlog::warn("kb ingest {}:{}: expected 3-4 tab-separated columns", tsv.string(), lineno);
            continue;
        }
        auto rel = parse_relation(text::trim(cols[1]));
        if (!rel) {
            ++stats.unknown_relation;
            continue;
        }
        KnowledgeEdge edge{normalize_concept(cols[0]), *rel, normalize_concept(cols[2]), 1.0};
        if (cols.size() == 4) {
            try {
                std::size_t used = 0;
                edge.weight = std::stod(cols[3], &used);
                if (text::trim(cols[3].substr(used)).size() != 0 || !(edge.weight >= 0.0))
                    throw std::invalid_argument("weight");
            } catch (const std::exception&) {
                ++stats.malformed;
                spdlog::warn("kb ingest {}:{}: bad weight '{}'", tsv.string(), lineno, cols[3]);
                continue;
            }
        }
        if (edge.subject.empty() || edge.object.empty() || edge.subject == edge.object) {
            ++stats.malformed;
            continue;
        }
        if (add(std::move(edge))) {
            ++stats.added;
        } else {
            ++stats.merged;
        }
    }
    if (stats.unknown_relation)
        spdlog::warn("kb ingest {}: skipped {} edges with unknown relations", tsv.string(),
                     stats.unknown_relation);
    return stats;
}

void KnowledgeStore::save(const std::filesystem::path& store) const {
    std::vector<std::string> concepts;
    concepts.reserve(by_concept_.size());
    for (const auto& [c, _] : by_concept_) concepts.push_back(c);
    std::sort(concepts.begin(), concepts.end());
    std::unordered_map<std::string, std::uint32_t> concept_id;
    for (std::uint32_t i = 0; i < concepts.size(); ++i) concept_id[concepts[i]] = i;

    std::vector<std::size_t> order(edges_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = edges_[a];
        const auto& y = edges_[b];
        return std::tie(x.subject, x.relation, x.object) < std::tie(y.subject, y.relation, y.object);
    });
    std::vector<std::uint32_t> position(edges_.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) position[order[i]] = i;

    auto tmp = store;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        out.write(kStoreMagic, 4);
        put(out, kStoreVersion);
        put(out, static_cast<std::uint64_t>(concepts.size()));
        for (const auto& c : concepts) put_string(out, c);
        put(out, static_cast<std::uint64_t>(order.size()));
        for (auto idx : order) {
            const auto& e = edges_[idx];
            put(out, concept_id.at(e.subject));
            put(out, static_cast<std::uint16_t>(e.relation));
            put(out, concept_id.at(e.object));
            put(out, e.weight);
        }
        // adjacency index: per term, edge positions in neighbor order
        for (const auto& c : concepts) {
            auto ids = by_concept_.at(c);
            std::sort(ids.begin(), ids.end(),
                      [&](std::size_t a, std::size_t b) { return edge_order(edges_[a], edges_[b]); });
            put(out, static_cast<std::uint32_t>(ids.size()));
            for (auto id : ids) put(out, position[id]);
        }
        if (!out) throw Error(ErrorCode::Io, "write failure on " + tmp.string());
    }
    std::filesystem::rename(tmp, store);
    std::error_code ec;
    std::filesystem::remove(log_path(store), ec);
}

KnowledgeStore KnowledgeStore::open(const std::filesystem::path& store) {
    std::ifstream in(store, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open store " + store.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kStoreMagic, 4) != 0)
        throw Error(ErrorCode::Io, store.string() + " is not a knowledge store");
    if (auto v = get<std::uint32_t>(in, store); v != kStoreVersion)
        throw Error(ErrorCode::Io, "unsupported store version " + std::to_string(v));

    KnowledgeStore ks;
    auto n_concepts = get<std::uint64_t>(in, store);
    std::vector<std::string> concepts;
    concepts.reserve(n_concepts);
    for (std::uint64_t i = 0; i < n_concepts; ++i) concepts.push_back(get_string(in, store));
    auto n_edges = get<std::uint64_t>(in, store);
    for (std::uint64_t i = 0; i < n_edges; ++i) {
        auto s = get<std::uint32_t>(in, store);
        auto r = get<std::uint16_t>(in, store);
        auto o = get<std::uint32_t>(in, store);
        auto w = get<double>(in, store);
        if (s >= concepts.size() || o >= concepts.size() || r > static_cast<std::uint16_t>(Relation::Entails))
            throw Error(ErrorCode::Io, "corrupt edge record in " + store.string());
        ks.add({concepts[s], static_cast<Relation>(r), concepts[o], w});
    }
    // The adjacency section is validated but the in-memory index is rebuilt by add().
    for (std::uint64_t i = 0; i < n_concepts; ++i) {
        auto degree = get<std::uint32_t>(in, store);
        for (std::uint32_t d = 0; d < degree; ++d) {
            if (get<std::uint32_t>(in, store) >= n_edges)
                throw Error(ErrorCode::Io, "corrupt adjacency index in " + store.string());
        }
    }

    auto log = log_path(store);
    if (std::filesystem::exists(log)) {
        std::ifstream lin(log, std::ios::binary);
        if (!lin.read(magic, 4) || std::memcmp(magic, kLogMagic, 4) != 0)
            throw Error(ErrorCode::Io, log.string() + " is not a knowledge store log");
        while (lin.peek() != std::char_traits<char>::eof()) {
            KnowledgeEdge e;
            e.subject = get_string(lin, log);
            e.relation = static_cast<Relation>(get<std::uint16_t>(lin, log));
            e.object = get_string(lin, log);
            e.weight = get<double>(lin, log);
            ks.add(std::move(e));
        }
    }
    return ks;
}

void KnowledgeStore::append_log(const std::filesystem::path& store,
                                const std::vector<KnowledgeEdge>& edges) {
    auto log = log_path(store);
    bool fresh = !std::filesystem::exists(log);
    std::ofstream out(log, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::Io, "cannot append to " + log.string());
    if (fresh) out.write(kLogMagic, 4);
    for (const auto& e : edges) {
        put_string(out, e.subject);
        put(out, static_cast<std::uint16_t>(e.relation));
        put_string(out, e.object);
        put(out, e.weight);
    }
    if (!out) throw Error(ErrorCode::Io, "write failure on " + log.string());
}

std::vector<KnowledgeEdge> KnowledgeStore::neighbors(std::string_view term,
                                                     const RelationPool& pool,
                                                     std::size_t limit) const {
    std::vector<KnowledgeEdge> out;
    auto it = by_concept_.find(std::string(term));
    if (it == by_concept_.end()) return out;
    for (auto idx : it->second)
        if (pool.contains(edges_[idx].relation)) out.push_back(edges_[idx]);
    std::sort(out.begin(), out.end(), edge_order);
    if (limit > 0 && out.size() > limit) out.resize(limit);
    return out;
}

double KnowledgeStore::concept_similarity(std::string_view a_raw, std::string_view b_raw) const {
    const std::string a = normalize_concept(a_raw);
    const std::string b = normalize_concept(b_raw);
    if (a == b) return 1.0;
    if (!by_concept_.contains(a) || !by_concept_.contains(b)) return 0.0;

    std::unordered_map<std::string_view, std::size_t> dist{{a, 0}};
    std::deque<std::string_view> frontier{a};
    while (!frontier.empty()) {
        auto cur = frontier.front();
        frontier.pop_front();
        std::size_t d = dist[cur];
        if (d >= kMaxSimilarityDepth) continue;
        for (auto idx : by_concept_.at(std::string(cur))) {
            const auto& e = edges_[idx];
            if (!is_taxonomic(e.relation)) continue;
            std::string_view next = e.subject == cur ? std::string_view(e.object) : std::string_view(e.subject);
            if (dist.contains(next)) continue;
            if (next == b) return 1.0 / (1.0 + static_cast<double>(d + 1));
            dist.emplace(next, d + 1);
            frontier.push_back(next);
        }
    }
    return 0.0;
}

bool KnowledgeStore::has_concept(std::string_view term) const {
    return by_concept_.contains(std::string(term));
}

}  // namespace mqag::kb
