#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "mqag/annotate.hpp"
#include "mqag/coach.hpp"
#include "mqag/kb.hpp"
#include "mqag/metrics.hpp"
#include "mqag/pipeline.hpp"

using namespace mqag;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << body;
}

int ingest_kb(const fs::path& tsv, const fs::path& store, bool append) {
    if (append) {
        kb::KnowledgeStore scratch;
        auto st = scratch.ingest_tsv(tsv);
        kb::KnowledgeStore::append_log(store, scratch.edges());
        std::cout << fmt::format("appended {} edges ({} skipped) to {}.log\n", scratch.size(), st.skipped(),
                                 store.string());
        return 0;
    }
    kb::KnowledgeStore s;
    if (fs::exists(store)) s = kb::KnowledgeStore::open(store);
    auto st = s.ingest_tsv(tsv);
    s.save(store);
    std::cout << fmt::format("lines {} added {} merged {} unknown_relation {} malformed {} -> {} edges\n", st.lines,
                             st.added, st.merged, st.unknown_relation, st.malformed, s.size());
    return 0;
}

int generate(const fs::path& config, bool dump_graph, bool dump_ranking) {
    auto cfg = pipeline::load_config(config);
    auto m = pipeline::generate(cfg, {dump_graph, dump_ranking});
    std::cout << fmt::format("{} questions from {} samples -> {}\n", m.questions, m.input, cfg.output_dir.string());
    for (const auto& [stage, n] : m.stages) std::cout << fmt::format("  {:<18} {}\n", stage, n);
    return m.fatal == 0 ? 0 : 1;
}

int refilter(const fs::path& config, const fs::path& candidates, const fs::path& out) {
    auto cfg = pipeline::load_config(config);
    auto r = pipeline::refilter(cfg, candidates, out);
    std::cout << fmt::format("{} questions kept, {} dropped -> {}\n", r.questions, r.dropped, out.string());
    return 0;
}

int eval(const fs::path& predictions, const std::string& corpus_path, const std::string& by_type,
         const std::string& json_out) {
    auto recs = metrics::load_predictions(predictions);
    auto rep = metrics::aggregate(recs);
    std::cout << metrics::format_table(rep);
    if (!json_out.empty()) write_file(json_out, metrics::to_json(rep).dump(2) + "\n");
    if (!by_type.empty()) {
        if (corpus_path.empty()) throw Error(ErrorCode::InvalidInput, "--by-type needs --corpus");
        auto loaded = corpus::load_corpus(corpus_path);
        std::map<std::string, QuestionType> types;
        for (const auto& r : loaded.records) types[r.sample_id] = r.question_type;
        write_file(by_type, metrics::by_type_csv(metrics::by_question_type(recs, types)));
    }
    return 0;
}

int coach_cmd(const fs::path& config, const fs::path& questions_path, const std::string& endpoint,
              const std::vector<std::string>& fail_modalities, const fs::path& out, const std::string& pass_id,
              std::size_t parallelism) {
    auto cfg = pipeline::load_config(config);
    auto samples = corpus::load_corpus(cfg.corpus).records;
    auto questions = pipeline::load_subquestions(questions_path);

    std::unique_ptr<coach::ModelClient> client;
    std::string url = endpoint;
    if (url.empty())
        if (const char* env = std::getenv("MQAG_COACH_ENDPOINT")) url = env;
    if (!url.empty()) {
        client = std::make_unique<coach::HttpModelClient>(url, std::chrono::milliseconds(10000));
    } else {
        // Scripted client: answers correctly except on the listed modalities.
        std::set<Modality> fail;
        for (const auto& f : fail_modalities) {
            auto m = parse_modality(f);
            if (!m) throw Error(ErrorCode::InvalidInput, "unknown modality " + f);
            fail.insert(*m);
        }
        std::map<std::string, const SubQuestion*> by_id;
        for (const auto& q : questions) by_id[q.question_id] = &q;
        client = std::make_unique<coach::ScriptedClient>([by_id, fail](const coach::CoachQuery& q) {
            const auto* sq = by_id.at(q.question_id);
            return fail.contains(sq->modality) ? (sq->label_index + 1) % 4 : sq->label_index;
        });
    }
    coach::CoachConfig cc;
    cc.pass_id = pass_id;
    cc.parallelism = parallelism;
    auto rep = coach::coach_pass(samples, questions, *client, cc);
    std::string body;
    for (const auto& e : rep.pool.entries) body += coach::to_json(e).dump() + "\n";
    write_file(out, body);
    std::cout << fmt::format("probed {} excluded {} skipped_samples {} admitted {}\n", rep.probed, rep.excluded,
                             rep.skipped_samples, rep.pool.entries.size());
    return rep.skipped_samples == 0 ? 0 : 1;
}

int annotate_serve(const fs::path& tasks, const fs::path& state, const std::string& host, int port) {
    annotate::AnnotationService svc(annotate::load_tasks(tasks), state);
    annotate::Server server(svc);
    spdlog::info("annotation service on {}:{}", host, port);
    server.start(host, port, true);
    return 0;
}

int annotate_aggregate(const fs::path& tasks, const fs::path& state, const fs::path& out, const std::string& report) {
    annotate::AnnotationService svc(annotate::load_tasks(tasks), state);
    std::string finalized, rejected;
    std::size_t nf = 0, nr = 0;
    for (const auto& o : svc.outcomes()) {
        if (const auto* f = std::get_if<annotate::Finalized>(&o)) {
            finalized += nlohmann::json(f->question).dump() + "\n";
            ++nf;
        } else {
            const auto& r = std::get<annotate::Rejected>(o);
            rejected += nlohmann::json{{"task_id", r.task_id}, {"reason", r.reason}, {"custom_answers", r.custom_answers}}
                            .dump() +
                        "\n";
            ++nr;
        }
    }
    write_file(out, finalized);
    write_file(state / "rejected.jsonl", rejected);
    auto m = annotate::annotation_metrics(svc.batches(), svc.labels());
    if (!report.empty()) write_file(report, annotate::to_json(m).dump(2) + "\n");
    std::cout << fmt::format("finalized {} rejected {}\n{}\n", nf, nr, annotate::to_json(m).dump(2));
    return 0;
}

int stats_cmd(const fs::path& questions, const std::string& manifest) {
    auto s = pipeline::stats(pipeline::load_subquestions(questions));
    auto j = pipeline::to_json(s);
    if (!manifest.empty()) {
        std::ifstream in(manifest);
        if (!in) throw Error(ErrorCode::Io, "cannot open " + manifest);
        auto m = nlohmann::json::parse(in);
        j["manifest_questions"] = m.at("questions");
        j["matches_manifest"] = m.at("questions").get<std::size_t>() == s.questions;
    }
    std::cout << j.dump(2) << "\n";
    return j.value("matches_manifest", true) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Modality-tagged sub-question generation, filtering and evaluation"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error");

    fs::path tsv, store, config, candidates, out, predictions, questions, tasks, state;
    bool append = false, dump_graph = false, dump_ranking = false;
    std::string corpus_path, by_type, json_out, endpoint, pass_id = "pass-0", host = "127.0.0.1", report, manifest;
    std::vector<std::string> fail;
    int port = 8080;
    std::size_t parallelism = 1;

    auto* ingest = app.add_subcommand("ingest-kb", "Ingest ConceptNet-style TSV edges into a store");
    ingest->add_option("--tsv", tsv, "subject<TAB>relation<TAB>object[<TAB>weight]")->required()->check(CLI::ExistingFile);
    ingest->add_option("--store", store, "store file")->required();
    ingest->add_flag("--append", append, "write to the append log instead of recompacting");

    auto* gen = app.add_subcommand("generate", "Generate sub-questions for a corpus");
    gen->add_option("--config", config)->required()->check(CLI::ExistingFile);
    gen->add_flag("--dump-graph", dump_graph, "write graphs.jsonl");
    gen->add_flag("--dump-ranking", dump_ranking, "write ranking.jsonl");

    auto* filt = app.add_subcommand("filter", "Re-run adversarial filtering on saved candidates");
    filt->add_option("--config", config)->required()->check(CLI::ExistingFile);
    filt->add_option("--candidates", candidates)->required()->check(CLI::ExistingFile);
    filt->add_option("--out", out)->required();

    auto* ev = app.add_subcommand("eval", "Score a predictions file");
    ev->add_option("--predictions", predictions)->required()->check(CLI::ExistingFile);
    ev->add_option("--corpus", corpus_path, "corpus for --by-type");
    ev->add_option("--by-type", by_type, "per question type CSV output");
    ev->add_option("--json", json_out, "report JSON output");

    auto* co = app.add_subcommand("coach", "Probe a model with sub-questions and collect failures");
    co->add_option("--config", config)->required()->check(CLI::ExistingFile);
    co->add_option("--questions", questions)->required()->check(CLI::ExistingFile);
    co->add_option("--endpoint", endpoint, "model endpoint (default MQAG_COACH_ENDPOINT)");
    co->add_option("--scripted-fail", fail, "without an endpoint: answer wrongly on these modalities");
    co->add_option("--out", out)->required();
    co->add_option("--pass-id", pass_id);
    co->add_option("--parallelism", parallelism)->check(CLI::PositiveNumber);

    auto* ann = app.add_subcommand("annotate", "Human verification service");
    ann->require_subcommand(1);
    auto* serve = ann->add_subcommand("serve", "Serve verification tasks over HTTP");
    serve->add_option("--tasks", tasks)->required()->check(CLI::ExistingFile);
    serve->add_option("--state", state)->required();
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    auto* agg = ann->add_subcommand("aggregate", "Finalize completed tasks");
    agg->add_option("--tasks", tasks)->required()->check(CLI::ExistingFile);
    agg->add_option("--state", state)->required();
    agg->add_option("--out", out)->required();
    agg->add_option("--report", report, "annotation metrics JSON");

    auto* st = app.add_subcommand("stats", "Dataset statistics for a sub-question file");
    st->add_option("--questions", questions)->required()->check(CLI::ExistingFile);
    st->add_option("--manifest", manifest, "cross-check against a run manifest");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));
    spdlog::set_default_logger(spdlog::default_logger());

    try {
        if (*ingest) return ingest_kb(tsv, store, append);
        if (*gen) return generate(config, dump_graph, dump_ranking);
        if (*filt) return refilter(config, candidates, out);
        if (*ev) return eval(predictions, corpus_path, by_type, json_out);
        if (*co) return coach_cmd(config, questions, endpoint, fail, out, pass_id, parallelism);
        if (*serve) return annotate_serve(tasks, state, host, port);
        if (*agg) return annotate_aggregate(tasks, state, out, report);
        if (*st) return stats_cmd(questions, manifest);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 0;
}
