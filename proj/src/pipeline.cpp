#include "mqag/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include "mqag/text.hpp"

namespace mqag::pipeline {

namespace fs = std::filesystem;

namespace {

void check_values(const PipelineConfig& c) {
    if (c.kb_store && c.kb_tsv) throw Error(ErrorCode::InvalidInput, "set either kb.store or kb.tsv, not both");
    c.merge.validate();
    c.filter.validate();
    if (c.distractor_budget < distract::kMinBudget)
        throw Error(ErrorCode::InvalidInput, "distract.budget must be at least 6");
    if (c.keyword_count == 0) throw Error(ErrorCode::InvalidInput, "keywords.count must be positive");
    if (c.parallelism == 0) throw Error(ErrorCode::InvalidInput, "parallelism must be positive");
    for (const char* name : scorers::kProviderNames) c.providers.get(name).validate();
}

}  // namespace

void PipelineConfig::validate() const {
    if (!fs::exists(corpus)) throw Error(ErrorCode::InvalidInput, "corpus not found: " + corpus.string());
    if (kb_store && !fs::exists(*kb_store))
        throw Error(ErrorCode::InvalidInput, "kb store not found: " + kb_store->string());
    if (kb_tsv && !fs::exists(*kb_tsv)) throw Error(ErrorCode::InvalidInput, "kb tsv not found: " + kb_tsv->string());
    check_values(*this);
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename T>
T scalar(const YAML::Node& n, const char* key, T fallback) {
    if (!n || !n[key]) return fallback;
    try {
        return n[key].as<T>();
    } catch (const YAML::Exception&) {
        throw Error(ErrorCode::InvalidInput, std::string("config: bad value for ") + key);
    }
}

void check_keys(const YAML::Node& n, const char* section, std::initializer_list<const char*> allowed) {
    if (!n) return;
    if (!n.IsMap()) throw Error(ErrorCode::InvalidInput, std::string("config: ") + section + " must be a mapping");
    for (const auto& kv : n) {
        auto k = kv.first.as<std::string>();
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw Error(ErrorCode::InvalidInput, std::string("config: unknown key ") + section + "." + k);
    }
}

}  // namespace

PipelineConfig config_from_yaml(const std::string& yaml, const fs::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml);
    } catch (const YAML::Exception& e) {
        throw Error(ErrorCode::InvalidInput, std::string("config: ") + e.what());
    }
    check_keys(root, "root",
               {"paths", "kb", "seed", "parallelism", "keywords", "merge", "distract", "filter", "providers"});
    check_keys(root["paths"], "paths", {"corpus", "output_dir"});
    check_keys(root["kb"], "kb", {"store", "tsv"});
    check_keys(root["keywords"], "keywords", {"count", "bk_per_keyword"});
    check_keys(root["merge"], "merge", {"node_threshold", "zscore"});
    check_keys(root["distract"], "distract", {"budget"});
    check_keys(root["filter"], "filter", {"similarity_cutoff", "final_count", "compare_to"});

    PipelineConfig c;
    auto paths = root["paths"];
    if (!paths || !paths["corpus"]) throw Error(ErrorCode::InvalidInput, "config: paths.corpus is required");
    c.corpus = resolve(base_dir, paths["corpus"].as<std::string>());
    c.output_dir = resolve(base_dir, scalar<std::string>(paths, "output_dir", "out"));
    if (auto kb = root["kb"]) {
        if (kb["store"]) c.kb_store = resolve(base_dir, kb["store"].as<std::string>());
        if (kb["tsv"]) c.kb_tsv = resolve(base_dir, kb["tsv"].as<std::string>());
    }
    c.seed = scalar<std::uint64_t>(root, "seed", 0);
    c.parallelism = scalar<std::size_t>(root, "parallelism", 1);
    c.keyword_count = scalar<std::size_t>(root["keywords"], "count", c.keyword_count);
    c.bk_per_keyword = scalar<std::size_t>(root["keywords"], "bk_per_keyword", c.bk_per_keyword);
    c.merge.node_threshold = scalar<double>(root["merge"], "node_threshold", c.merge.node_threshold);
    c.merge.zscore = scalar<bool>(root["merge"], "zscore", c.merge.zscore);
    c.distractor_budget = scalar<std::size_t>(root["distract"], "budget", c.distractor_budget);
    c.filter.similarity_cutoff = scalar<double>(root["filter"], "similarity_cutoff", c.filter.similarity_cutoff);
    c.filter.final_count = scalar<int>(root["filter"], "final_count", c.filter.final_count);
    auto cmp = scalar<std::string>(root["filter"], "compare_to", "textual_statement");
    if (cmp == "textual_statement") c.filter.compare_to = filter::FilterConfig::CompareTo::TextualStatement;
    else if (cmp == "correct_answer") c.filter.compare_to = filter::FilterConfig::CompareTo::CorrectAnswer;
    else throw Error(ErrorCode::InvalidInput, "config: filter.compare_to must be textual_statement or correct_answer");

    if (auto prov = root["providers"]) {
        if (!prov.IsMap()) throw Error(ErrorCode::InvalidInput, "config: providers must be a mapping");
        for (const auto& kv : prov) {
            auto name = kv.first.as<std::string>();
            bool known = false;
            for (const char* n : scorers::kProviderNames) known = known || name == n;
            if (!known) throw Error(ErrorCode::InvalidInput, "config: unknown provider " + name);
            check_keys(kv.second, name.c_str(), {"kind", "endpoint", "timeout_ms", "cache_path", "retries"});
            scorers::ProviderConfig pc;
            auto kind = scalar<std::string>(kv.second, "kind", "offline");
            if (kind == "http") pc.kind = scorers::ProviderConfig::Kind::Http;
            else if (kind != "offline") throw Error(ErrorCode::InvalidInput, "config: provider kind must be offline or http");
            if (kv.second["endpoint"]) pc.endpoint = kv.second["endpoint"].as<std::string>();
            pc.timeout = std::chrono::milliseconds(scalar<long>(kv.second, "timeout_ms", 10'000));
            if (kv.second["cache_path"]) pc.cache_path = resolve(base_dir, kv.second["cache_path"].as<std::string>());
            pc.retry.retries = scalar<int>(kv.second, "retries", pc.retry.retries);
            c.providers.providers[name] = pc;
        }
    }
    c.providers.apply_env_overrides();
    check_values(c);
    return c;
}

PipelineConfig load_config(const fs::path& yaml_path) {
    std::ifstream in(yaml_path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config " + yaml_path.string());
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_yaml(body, fs::absolute(yaml_path).parent_path());
}

nlohmann::json canonical_json(const PipelineConfig& c) {
    nlohmann::json providers = nlohmann::json::object();
    for (const char* name : scorers::kProviderNames) {
        const auto& p = c.providers.get(name);
        providers[name] = {{"kind", p.kind == scorers::ProviderConfig::Kind::Http ? "http" : "offline"},
                           {"endpoint", p.endpoint ? nlohmann::json(*p.endpoint) : nlohmann::json(nullptr)},
                           {"timeout_ms", p.timeout.count()},
                           {"cache_path", p.cache_path ? nlohmann::json(p.cache_path->string()) : nlohmann::json(nullptr)},
                           {"retries", p.retry.retries}};
    }
    return {{"paths", {{"corpus", c.corpus.string()}, {"output_dir", c.output_dir.string()}}},
            {"kb",
             {{"store", c.kb_store ? nlohmann::json(c.kb_store->string()) : nlohmann::json(nullptr)},
              {"tsv", c.kb_tsv ? nlohmann::json(c.kb_tsv->string()) : nlohmann::json(nullptr)}}},
            {"seed", c.seed},
            {"parallelism", c.parallelism},
            {"keywords", {{"count", c.keyword_count}, {"bk_per_keyword", c.bk_per_keyword}}},
            {"merge", {{"node_threshold", c.merge.node_threshold}, {"zscore", c.merge.zscore}}},
            {"distract", {{"budget", c.distractor_budget}}},
            {"filter",
             {{"similarity_cutoff", c.filter.similarity_cutoff},
              {"final_count", c.filter.final_count},
              {"compare_to", c.filter.compare_to == filter::FilterConfig::CompareTo::TextualStatement
                                 ? "textual_statement"
                                 : "correct_answer"}}},
            {"providers", providers}};
}

std::string config_hash(const PipelineConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(text::fnv1a64(canonical_json(cfg).dump())));
    return buf;
}

Context Context::create(const PipelineConfig& cfg) {
    Context ctx;
    ctx.config = cfg;
    if (cfg.kb_store) {
        ctx.store = std::make_unique<kb::KnowledgeStore>(kb::KnowledgeStore::open(*cfg.kb_store));
    } else if (cfg.kb_tsv) {
        ctx.store = std::make_unique<kb::KnowledgeStore>();
        auto st = ctx.store->ingest_tsv(*cfg.kb_tsv);
        if (st.skipped() > 0) spdlog::warn("kb: skipped {} of {} lines", st.skipped(), st.lines);
    }
    ctx.providers = scorers::Providers::from_config(cfg.providers, ctx.store.get());
    return ctx;
}

// --- attempts ---------------------------------------------------------------

nlohmann::json to_json(const Attempt& a) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : a.candidates)
        cands.push_back({{"text", c.text}, {"replacement", c.replacement},
                         {"source", std::string(distract::to_string(c.source))}});
    return {{"question_id", a.question_id},
            {"modality", std::string(to_string(a.modality))},
            {"asked_slot", std::string(to_string(a.slot))},
            {"source_triplet", a.triplet},
            {"stem", a.stem},
            {"correct", a.correct},
            {"shuffle_seed", a.shuffle_seed},
            {"provenance", a.provenance},
            {"candidates", cands}};
}

Attempt attempt_from_json(const nlohmann::json& j) {
    try {
        Attempt a;
        a.question_id = j.at("question_id").get<std::string>();
        auto m = parse_modality(j.at("modality").get<std::string>());
        auto s = parse_slot(j.at("asked_slot").get<std::string>());
        if (!m || !s) throw std::invalid_argument("attempt: bad modality or slot");
        a.modality = *m;
        a.slot = *s;
        const auto& t = j.at("source_triplet");
        a.triplet = {t.at("s").get<std::string>(), t.at("p").get<std::string>(), t.at("o").get<std::string>(), a.modality,
                     {}};
        a.stem = j.at("stem").get<std::string>();
        a.correct = j.at("correct").get<std::string>();
        a.shuffle_seed = j.at("shuffle_seed").get<std::uint64_t>();
        a.provenance = j.value("provenance", nlohmann::json::object());
        for (const auto& c : j.at("candidates")) {
            distract::DistractorCandidate dc;
            dc.text = c.at("text").get<std::string>();
            dc.replacement = c.value("replacement", "");
            auto src = c.value("source", "explicit_kb");
            dc.source = src == "implicit_maskfill" ? distract::Source::ImplicitMaskFill
                        : src == "realizer"        ? distract::Source::Realizer
                                                   : distract::Source::ExplicitKb;
            a.candidates.push_back(std::move(dc));
        }
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("attempt: ") + e.what());
    }
}

SubQuestion assemble(const Attempt& a, const SampleRecord& rec, const Context& ctx) {
    auto fcfg = ctx.config.filter;
    fcfg.shuffle_seed = a.shuffle_seed;
    filter::QuestionMeta meta{a.question_id, a.modality, a.slot, a.triplet, a.provenance};
    return filter::filter_and_assemble(a.candidates, a.correct, rec, a.stem, meta, fcfg, ctx.providers);
}

// --- per sample -------------------------------------------------------------

std::vector<Triplet> retrieve_background(const KeywordSet& keywords, const kb::KnowledgeStore* store,
                                         std::size_t per_keyword, const std::string& sample_id) {
    std::vector<Triplet> out;
    if (!store) return out;
    for (const auto& kw : keywords.keywords) {
        for (const auto& e : store->neighbors(text::kb_concept(kw.term), kb::bk_pool(), per_keyword)) {
            Triplet t{text::display_concept(e.subject), std::string(kb::relation_phrase(e.relation)),
                      text::display_concept(e.object), Modality::BackgroundKnowledge, sample_id};
            if (std::find_if(out.begin(), out.end(), [&](const Triplet& o) { return o.same_fact(t); }) == out.end())
                out.push_back(std::move(t));
        }
    }
    return out;
}

namespace {

std::vector<Slot> slot_order(const Triplet& t, std::uint64_t seed) {
    auto slots = qagen::applicable_slots(t);
    if (slots.empty()) return slots;
    auto first = slots[seed % slots.size()];
    std::vector<Slot> out{first};
    for (auto s : slots)
        if (s != first) out.push_back(s);
    return out;
}

}  // namespace

SampleResult process_sample(const SampleRecord& rec, const Context& ctx) {
    SampleResult res;
    res.sample_id = rec.sample_id;
    const auto& p = ctx.providers;
    const auto& cfg = ctx.config;

    Statement visual;
    try {
        visual = corpus::build_visual_statement(rec);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::AbsentCaption) throw;
        res.stage = "absent_caption";
        return res;
    }
    auto textual = corpus::build_textual_statement(rec);
    auto keywords = corpus::extract_keywords({visual, textual}, cfg.keyword_count);

    auto tag = [&](std::vector<Triplet> ts) {
        for (auto& t : ts) t.source_sample = rec.sample_id;
        return ts;
    };
    std::vector<graph::DomainGraph> graphs{
        graph::build_domain_graph(tag(p.parser->parse(visual)), Modality::Vision),
        graph::build_domain_graph(tag(p.parser->parse(textual)), Modality::Text),
        graph::build_domain_graph(retrieve_background(keywords, ctx.store.get(), cfg.bk_per_keyword, rec.sample_id),
                                  Modality::BackgroundKnowledge)};
    auto merged = graph::merge(graphs, cfg.merge, p);
    res.graph = graph::to_json(merged);
    if (merged.edges.empty()) {
        res.stage = "empty_graph";
        return res;
    }
    res.ranking = select::rank_triplets(merged, rec, p);
    auto picked = select::pick_per_modality(res.ranking);

    for (auto m : kAllModalities) {
        auto code = std::string(modality_code(m));
        auto it = picked.find(m);
        if (it == picked.end()) {
            ++res.failures[code + ":no_triplet"];
            continue;
        }
        const auto& rel = it->second;
        auto qid = qagen::question_id(rec.sample_id, m);
        auto seed = qagen::question_seed(qid, cfg.seed);
        auto slots = slot_order(rel.triplet, seed);
        if (slots.empty()) {
            ++res.failures[code + ":no_slot"];
            continue;
        }
        std::string last_failure;
        for (auto slot : slots) {
            auto draft = qagen::make_question(rel.triplet, slot);
            Attempt a;
            a.question_id = qid;
            a.modality = m;
            a.slot = slot;
            a.triplet = rel.triplet;
            a.stem = draft.stem;
            a.correct = draft.answer;
            a.shuffle_seed = text::mix64(seed);
            a.provenance = {{"relevance", {{"text_term", rel.text_term}, {"image_term", rel.image_term}, {"total", rel.total}}},
                            {"parser", p.parser->name()}};
            try {
                a.candidates = distract::gen_candidates(rel.triplet, slot, draft.answer, cfg.distractor_budget, p);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::EmptyCandidateSet) throw;
                last_failure = "empty_candidates";
                continue;
            }
            res.attempts.push_back(a);
            try {
                res.questions.push_back(assemble(a, rec, ctx));
                last_failure.clear();
                break;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::InsufficientDistractors) throw;
                last_failure = "insufficient_distractors";
            }
        }
        if (!last_failure.empty()) ++res.failures[code + ":" + last_failure];
    }
    res.stage = res.questions.empty() ? "no_question" : "emitted";
    return res;
}

// --- generate ---------------------------------------------------------------

nlohmann::json to_json(const Manifest& m) {
    return {{"input_samples", m.input},       {"stages", m.stages},     {"modality_emitted", m.modality_emitted},
            {"modality_failures", m.modality_failures}, {"questions", m.questions}, {"fatal_errors", m.fatal},
            {"config_hash", m.config_hash},   {"config", m.config}};
}

static void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    for (const auto& l : lines) out << l << '\n';
}

Manifest generate(const PipelineConfig& cfg, const GenerateOptions& opts) {
    cfg.validate();
    auto loaded = corpus::load_corpus(cfg.corpus);
    for (const auto& e : loaded.errors) spdlog::warn("{}: {}", cfg.corpus.string(), e.message);
    auto ctx = Context::create(cfg);

    const auto& recs = loaded.records;
    std::vector<SampleResult> results(recs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < recs.size(); i = next++) {
            try {
                results[i] = process_sample(recs[i], ctx);
            } catch (const Error& e) {
                spdlog::error("sample {}: {}", recs[i].sample_id, e.what());
                results[i] = SampleResult{};
                results[i].sample_id = recs[i].sample_id;
                results[i].stage = "provider_error";
            }
        }
    };
    std::size_t width = std::max<std::size_t>(1, std::min(cfg.parallelism, recs.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < width; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    Manifest m;
    m.input = recs.size() + loaded.errors.size();
    for (const char* s : kStages) m.stages[s] = 0;
    m.stages["malformed_record"] = loaded.errors.size();
    for (auto mod : kAllModalities) m.modality_emitted[std::string(to_string(mod))] = 0;
    std::vector<std::string> questions, attempts, graphs, rankings;
    for (const auto& r : results) {
        ++m.stages[r.stage];
        for (const auto& [k, n] : r.failures) m.modality_failures[k] += n;
        for (const auto& q : r.questions) {
            ++m.modality_emitted[std::string(to_string(q.modality))];
            questions.push_back(nlohmann::json(q).dump());
        }
        for (const auto& a : r.attempts) {
            auto j = to_json(a);
            j["sample_id"] = r.sample_id;
            attempts.push_back(j.dump());
        }
        if (opts.dump_graph && !r.graph.is_null())
            graphs.push_back(nlohmann::json{{"sample_id", r.sample_id}, {"graph", r.graph}}.dump());
        if (opts.dump_ranking) {
            nlohmann::json ranked = nlohmann::json::array();
            for (const auto& s : r.ranking) ranked.push_back(select::to_json(s));
            rankings.push_back(nlohmann::json{{"sample_id", r.sample_id}, {"ranked", ranked}}.dump());
        }
    }
    m.questions = questions.size();
    m.fatal = m.stages["provider_error"];
    m.config = canonical_json(cfg);
    m.config_hash = config_hash(cfg);

    fs::create_directories(cfg.output_dir);
    write_lines(cfg.output_dir / "subquestions.jsonl", questions);
    write_lines(cfg.output_dir / "candidates.jsonl", attempts);
    if (opts.dump_graph) write_lines(cfg.output_dir / "graphs.jsonl", graphs);
    if (opts.dump_ranking) write_lines(cfg.output_dir / "ranking.jsonl", rankings);
    write_lines(cfg.output_dir / "manifest.json", {to_json(m).dump(2)});
    return m;
}

RefilterResult refilter(const PipelineConfig& cfg, const fs::path& candidates, const fs::path& out) {
    auto loaded = corpus::load_corpus(cfg.corpus);
    std::map<std::string, const SampleRecord*> recs;
    for (const auto& r : loaded.records) recs.emplace(r.sample_id, &r);
    auto ctx = Context::create(cfg);

    std::ifstream in(candidates);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + candidates.string());
    RefilterResult res;
    std::vector<std::string> lines;
    std::set<std::string> done, seen;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        auto a = attempt_from_json(j);
        auto sid = j.at("sample_id").get<std::string>();
        seen.insert(a.question_id);
        if (done.contains(a.question_id)) continue;
        auto it = recs.find(sid);
        if (it == recs.end()) throw Error(ErrorCode::InvalidInput, "candidates reference unknown sample " + sid);
        try {
            lines.push_back(nlohmann::json(assemble(a, *it->second, ctx)).dump());
            done.insert(a.question_id);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InsufficientDistractors) throw;
        }
    }
    res.questions = done.size();
    res.dropped = seen.size() - done.size();
    write_lines(out, lines);
    return res;
}

std::vector<SubQuestion> load_subquestions(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<SubQuestion> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(subquestion_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw Error(ErrorCode::InvalidInput, path.string() + " line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

bool is_validation(const std::string& sample_id) { return text::fnv1a32(sample_id) % 11 == 0; }

DatasetStats stats(const std::vector<SubQuestion>& questions) {
    DatasetStats s;
    for (auto m : kAllModalities) s.by_modality[std::string(to_string(m))] = 0;
    double words = 0.0;
    for (const auto& q : questions) {
        ++s.questions;
        ++s.by_modality[std::string(to_string(q.modality))];
        words += static_cast<double>(text::words(q.answer()).size());
        if (is_validation(q.sample_id)) ++s.val;
        else ++s.train;
    }
    if (s.questions > 0) s.average_answer_words = words / static_cast<double>(s.questions);
    return s;
}

nlohmann::json to_json(const DatasetStats& s) {
    return {{"questions", s.questions},
            {"by_modality", s.by_modality},
            {"average_answer_words", s.average_answer_words},
            {"split", {{"train", s.train}, {"val", s.val}}}};
}

}  // namespace mqag::pipeline
