#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mqag/corpus.hpp"
#include "mqag/distract.hpp"
#include "mqag/filter.hpp"
#include "mqag/graph.hpp"
#include "mqag/kb.hpp"
#include "mqag/qagen.hpp"
#include "mqag/scorers.hpp"
#include "mqag/select.hpp"

namespace mqag::pipeline {

struct PipelineConfig {
    std::filesystem::path corpus;
    std::optional<std::filesystem::path> kb_store;  // compacted store from ingest-kb
    std::optional<std::filesystem::path> kb_tsv;    // or raw edges ingested at start
    std::filesystem::path output_dir = "out";

    scorers::ProvidersConfig providers;
    graph::MergeConfig merge;
    filter::FilterConfig filter;
    std::size_t keyword_count = corpus::kDefaultKeywordCount;
    std::size_t bk_per_keyword = 3;
    std::size_t distractor_budget = distract::kDefaultBudget;
    std::uint64_t seed = 0;
    std::size_t parallelism = 1;

    // Every path must exist (output_dir is created on demand).
    void validate() const;
};

// Relative paths resolve against the config file's directory. Environment
// endpoint overrides are applied. Throws Error(InvalidInput) on bad values.
PipelineConfig load_config(const std::filesystem::path& yaml_path);
PipelineConfig config_from_yaml(const std::string& yaml, const std::filesystem::path& base_dir);

// Canonical form: every field, defaults included, key-sorted.
nlohmann::json canonical_json(const PipelineConfig& cfg);
std::string config_hash(const PipelineConfig& cfg);  // 16 hex digits

// A knowledge store plus the providers that read it.
struct Context {
    std::unique_ptr<kb::KnowledgeStore> store;
    scorers::Providers providers;
    PipelineConfig config;

    static Context create(const PipelineConfig& cfg);
};

// Stages a sample can end in. They partition the input.
inline constexpr const char* kStages[] = {"malformed_record", "absent_caption", "empty_graph",
                                          "no_question", "provider_error", "emitted"};

struct Attempt {
    std::string question_id;
    Modality modality = Modality::Vision;
    Slot slot = Slot::Object;
    Triplet triplet;
    std::string stem;
    std::string correct;
    std::uint64_t shuffle_seed = 0;
    nlohmann::json provenance = nlohmann::json::object();
    std::vector<distract::DistractorCandidate> candidates;
};

nlohmann::json to_json(const Attempt& a);
Attempt attempt_from_json(const nlohmann::json& j);

struct SampleResult {
    std::string sample_id;
    std::string stage;
    std::vector<SubQuestion> questions;
    std::vector<Attempt> attempts;
    std::map<std::string, std::size_t> failures;  // per-modality failure reasons
    nlohmann::json graph;
    std::vector<select::RelevanceScore> ranking;
};

SampleResult process_sample(const SampleRecord& rec, const Context& ctx);

// Retrieves background-knowledge triplets for the sample's keywords.
std::vector<Triplet> retrieve_background(const KeywordSet& keywords, const kb::KnowledgeStore* store,
                                         std::size_t per_keyword, const std::string& sample_id);

// Filters one attempt exactly as generate does.
SubQuestion assemble(const Attempt& a, const SampleRecord& rec, const Context& ctx);

struct GenerateOptions {
    bool dump_graph = false;
    bool dump_ranking = false;
};

struct Manifest {
    std::size_t input = 0;
    std::map<std::string, std::size_t> stages;
    std::map<std::string, std::size_t> modality_emitted;
    std::map<std::string, std::size_t> modality_failures;
    std::size_t questions = 0;
    std::size_t fatal = 0;
    std::string config_hash;
    nlohmann::json config;
};

nlohmann::json to_json(const Manifest& m);

// Writes subquestions.jsonl, candidates.jsonl and manifest.json (plus
// graphs.jsonl / ranking.jsonl on request) under output_dir.
Manifest generate(const PipelineConfig& cfg, const GenerateOptions& opts = {});

struct RefilterResult {
    std::size_t questions = 0;
    std::size_t dropped = 0;
};

// Re-runs filtering on candidates.jsonl with the config's filter settings;
// the first attempt per question id that survives is written to `out`.
RefilterResult refilter(const PipelineConfig& cfg, const std::filesystem::path& candidates,
                        const std::filesystem::path& out);

std::vector<SubQuestion> load_subquestions(const std::filesystem::path& path);

// 10:1 train/val labeling by a stable hash of the sample id.
bool is_validation(const std::string& sample_id);

struct DatasetStats {
    std::size_t questions = 0;
    std::map<std::string, std::size_t> by_modality;
    double average_answer_words = 0.0;
    std::size_t train = 0;
    std::size_t val = 0;
};

DatasetStats stats(const std::vector<SubQuestion>& questions);
nlohmann::json to_json(const DatasetStats& s);

}  // namespace mqag::pipeline
