#include "mqag/scorers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>

#include <spdlog/spdlog.h>

#include "mqag/core.hpp"
#include "mqag/lexicon.hpp"
#include "mqag/text.hpp"

namespace mqag::scorers {

void ProviderConfig::validate() const {
    if (kind == Kind::Http && (!endpoint || endpoint->empty()))
        throw Error(ErrorCode::InvalidInput, "http provider needs an endpoint");
    if (kind == Kind::Offline && endpoint)
        throw Error(ErrorCode::InvalidInput, "offline provider must not set an endpoint");
    if (timeout.count() <= 0) throw Error(ErrorCode::InvalidInput, "provider timeout must be positive");
    if (retry.retries < 0) throw Error(ErrorCode::InvalidInput, "retries must be >= 0");
}

double cosine(const Embedding& a, const Embedding& b) {
    if (a.values.size() != b.values.size())
        throw Error(ErrorCode::InvalidInput, "embedding dimensions differ");
    if (a.norm == 0.0 || b.norm == 0.0) return 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    return dot / (a.norm * b.norm);
}

static double l2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

std::size_t HashedBagOfWords::bucket(const std::string& token) {
    return text::fnv1a32(token) % kOfflineEmbeddingDim;
}

Embedding HashedBagOfWords::embed(const std::string& sentence) const {
    Embedding e;
    e.values.assign(kOfflineEmbeddingDim, 0.0);
    for (const auto& tok : text::tokens(sentence)) e.values[bucket(tok)] += 1.0;
    double n = l2(e.values);
    if (n > 0.0) {
        for (double& x : e.values) x /= n;
        e.norm = 1.0;
    }
    return e;
}

double TagJaccard::score(const ImageRef& image, const std::string& sentence) const {
    std::set<std::string> tags;
    for (const auto& t : image.object_tags) tags.insert(text::lower(text::trim(t)));
    auto toks = text::content_tokens(sentence);
    std::set<std::string> words(toks.begin(), toks.end());
    std::size_t inter = 0;
    for (const auto& t : tags) inter += words.count(t);
    std::size_t uni = tags.size() + words.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Longest run of leading content tokens that names a KB term, else the
// first content token. Person tags stand for the generic "person" term.
static std::string head_concept(const std::string& prompt, const kb::KnowledgeStore& store) {
    std::vector<std::string> lead;
    for (const auto& tok : text::tokens(prompt)) {
        if (tok == "mask") break;
        if (lexicon::is_determiner(tok)) {
            if (lead.empty()) continue;
            break;
        }
        if (lexicon::is_verbal(tok) && !lead.empty()) break;
        if (lexicon::is_preposition_phrase(tok) && !lead.empty()) break;
        if (text::is_stopword(tok) && !text::is_person_like(tok)) {
            if (lead.empty()) continue;
            break;
        }
        lead.push_back(text::is_person_like(tok) ? "person" : tok);
    }
    for (std::size_t len = lead.size(); len > 1; --len) {
        std::vector<std::string> head(lead.begin(), lead.begin() + static_cast<std::ptrdiff_t>(len));
        auto c = text::kb_concept(text::join(head));
        if (store.has_concept(c)) return c;
    }
    return lead.empty() ? std::string{} : lead.front();
}

std::vector<std::string> KbMaskFiller::fill(const std::string& prompt, std::size_t n) const {
    std::vector<std::string> out;
    if (!store_ || n == 0) return out;
    auto head = head_concept(prompt, *store_);
    if (head.empty()) return out;
    auto present = text::tokens(prompt);
    std::set<std::string> seen(present.begin(), present.end());
    seen.insert(text::display_concept(head));
    for (const auto& e : store_->neighbors(head, kb::distractor_pool(), 0)) {
        const auto& other = e.subject == head ? e.object : e.subject;
        auto shown = text::display_concept(other);
        if (!seen.insert(shown).second) continue;
        out.push_back(shown);
        if (out.size() == n) break;
    }
    return out;
}

std::vector<std::string> RuleConceptRealizer::realize(const std::vector<std::string>& concepts,
                                                      std::size_t n) const {
    std::vector<std::string> out;
    if (concepts.size() < 2 || n == 0) return out;
    auto c1 = text::display_concept(concepts[0]);
    auto c2 = text::display_concept(concepts[1]);
    std::string c3 = concepts.size() > 2 ? text::display_concept(concepts[2]) : std::string{};
    bool person = text::is_person_like(text::lower(c1));
    std::string verb = lexicon::is_preposition_phrase(text::lower(c2)) ? "is " + c2 : c2;

    auto make = [&](const std::string& subj_article, bool obj_article) {
        std::string s = person ? c1 : subj_article + " " + c1;
        s += " " + verb;
        if (!c3.empty()) s += obj_article ? " the " + c3 : " " + c3;
        return text::normalize_sentence(s);
    };
    for (auto s : {make("The", true), make("The", false), make("A", true)}) {
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
        if (out.size() == n) break;
    }
    return out;
}

GrammarResult RuleGrammarChecker::check(const std::string& sentence) const {
    GrammarResult r;
    r.corrected = text::normalize_sentence(sentence);
    auto toks = text::tokens(sentence);
    bool has_verb = std::any_of(toks.begin(), toks.end(), [](const std::string& t) { return lexicon::is_verbal(t); });
    auto quotes = std::count(sentence.begin(), sentence.end(), '"');
    r.ok = !toks.empty() && has_verb && quotes % 2 == 0;
    return r;
}

// --- HTTP adapters --------------------------------------------------------

HttpAdapter::HttpAdapter(std::string provider, const ProviderConfig& cfg,
                         std::shared_ptr<http::ResponseCache> cache)
    : provider_(std::move(provider)),
      client_((cfg.validate(), cfg.endpoint.value_or("")), cfg.timeout, cfg.retry),
      cache_(std::move(cache)) {
    if (!cache_ && cfg.cache_path) cache_ = std::make_shared<http::ResponseCache>(cfg.cache_path);
}

nlohmann::json HttpAdapter::call(const nlohmann::json& request) const {
    if (cache_) {
        if (auto hit = cache_->get(provider_, request)) return *hit;
    }
    auto response = client_.post(request);
    if (cache_) cache_->put(provider_, request, response);
    return response;
}

template <typename F>
static auto read_field(const std::string& provider, const nlohmann::json& j, F&& f) {
    try {
        return f(j);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Transport, provider + " returned an unexpected body: " + e.what());
    }
}

Embedding HttpSentenceEncoder::embed(const std::string& sentence) const {
    auto res = call({{"text", sentence}});
    Embedding e;
    e.values = read_field("similarity", res, [](const nlohmann::json& j) {
        return j.at("embedding").get<std::vector<double>>();
    });
    e.norm = l2(e.values);
    return e;
}

double HttpImageTextScorer::score(const ImageRef& image, const std::string& sentence) const {
    auto res = call({{"image_id", image.image_id}, {"text", sentence}});
    return read_field("image_text", res, [](const nlohmann::json& j) { return j.at("score").get<double>(); });
}

std::vector<std::string> HttpMaskFiller::fill(const std::string& prompt, std::size_t n) const {
    auto res = call({{"prompt", prompt}, {"n", n}});
    auto fills = read_field("mask_fill", res, [](const nlohmann::json& j) {
        return j.at("fills").get<std::vector<std::string>>();
    });
    if (fills.size() > n) fills.resize(n);
    return fills;
}

std::vector<std::string> HttpConceptRealizer::realize(const std::vector<std::string>& concepts,
                                                      std::size_t n) const {
    auto res = call({{"concepts", concepts}, {"n", n}});
    return read_field("realizer", res, [](const nlohmann::json& j) {
        return j.at("sentences").get<std::vector<std::string>>();
    });
}

GrammarResult HttpGrammarChecker::check(const std::string& sentence) const {
    auto res = call({{"text", sentence}});
    return read_field("grammar", res, [](const nlohmann::json& j) {
        return GrammarResult{j.at("ok").get<bool>(), j.at("corrected").get<std::string>()};
    });
}

std::vector<Triplet> HttpStatementParser::parse(const Statement& s) const {
    auto res = call({{"text", s.text}});
    return read_field("parser", res, [&](const nlohmann::json& j) {
        std::vector<Triplet> out;
        for (const auto& t : j.at("triplets")) {
            Triplet tr{text::lower(t.at("s").get<std::string>()), text::lower(t.at("p").get<std::string>()),
                       text::lower(t.at("o").get<std::string>()), s.modality, s.source_sample};
            if (tr.subject.empty() || tr.predicate.empty() || tr.object.empty()) continue;
            out.push_back(std::move(tr));
        }
        return out;
    });
}

// --- bundle ---------------------------------------------------------------

const ProviderConfig& ProvidersConfig::get(const std::string& name) const {
    static const ProviderConfig kOffline{};
    auto it = providers.find(name);
    return it == providers.end() ? kOffline : it->second;
}

void ProvidersConfig::apply_env_overrides() {
    for (const char* name : kProviderNames) {
        std::string var = "MQAG_";
        for (const char* c = name; *c; ++c) var += static_cast<char>(std::toupper(static_cast<unsigned char>(*c)));
        var += "_ENDPOINT";
        const char* url = std::getenv(var.c_str());
        if (!url || !*url) continue;
        auto& cfg = providers[name];
        cfg.kind = ProviderConfig::Kind::Http;
        cfg.endpoint = url;
        spdlog::info("{} routed to {}", name, url);
    }
}

Providers Providers::offline(const kb::KnowledgeStore* store) {
    Providers p;
    p.encoder = std::make_shared<HashedBagOfWords>();
    p.image_text = std::make_shared<TagJaccard>();
    p.mask_filler = std::make_shared<KbMaskFiller>(store);
    p.realizer = std::make_shared<RuleConceptRealizer>();
    p.grammar = std::make_shared<RuleGrammarChecker>();
    p.parser = std::make_shared<svo::RuleParser>();
    p.store = store;
    return p;
}

Providers Providers::from_config(const ProvidersConfig& cfg, const kb::KnowledgeStore* store) {
    Providers p = offline(store);
    std::map<std::string, std::shared_ptr<http::ResponseCache>> caches;
    auto cache_for = [&](const ProviderConfig& c) -> std::shared_ptr<http::ResponseCache> {
        if (!c.cache_path) return nullptr;
        auto& slot = caches[c.cache_path->string()];
        if (!slot) slot = std::make_shared<http::ResponseCache>(c.cache_path);
        return slot;
    };
    for (const char* name : kProviderNames) {
        const auto& c = cfg.get(name);
        c.validate();
        if (c.kind != ProviderConfig::Kind::Http) continue;
        std::string n = name;
        auto cache = cache_for(c);
        if (n == "similarity") p.encoder = std::make_shared<HttpSentenceEncoder>(c, cache);
        else if (n == "image_text") p.image_text = std::make_shared<HttpImageTextScorer>(c, cache);
        else if (n == "mask_fill") p.mask_filler = std::make_shared<HttpMaskFiller>(c, cache);
        else if (n == "realizer") p.realizer = std::make_shared<HttpConceptRealizer>(c, cache);
        else if (n == "grammar") p.grammar = std::make_shared<HttpGrammarChecker>(c, cache);
        else if (n == "parser") p.parser = std::make_shared<HttpStatementParser>(c, cache);
    }
    return p;
}

// --- operations -----------------------------------------------------------

double sentence_similarity(const Providers& p, const std::string& a, const std::string& b) {
    return cosine(p.encoder->embed(a), p.encoder->embed(b));
}

double image_text_score(const Providers& p, const ImageRef& image, const std::string& sentence) {
    return p.image_text->score(image, sentence);
}

std::vector<std::string> mask_fill(const Providers& p, const std::string& prompt, std::size_t n) {
    if (text::lower(prompt).find(kMaskToken) == std::string::npos)
        throw Error(ErrorCode::InvalidPrompt, "prompt has no [mask] token: " + prompt);
    if (n == 0) return {};
    return p.mask_filler->fill(prompt, n);
}

bool mentions_concept(const std::string& sentence, const std::string& term) {
    auto needle = text::comparison_key(text::display_concept(term));
    if (needle.empty()) return true;
    auto hay = " " + text::comparison_key(sentence) + " ";
    return hay.find(" " + needle + " ") != std::string::npos;
}

std::vector<std::string> realize_from_concepts(const Providers& p,
                                               const std::vector<std::string>& concepts,
                                               std::size_t n) {
    std::vector<std::string> out;
    for (auto& s : p.realizer->realize(concepts, n)) {
        bool all = std::all_of(concepts.begin(), concepts.end(),
                               [&](const std::string& c) { return mentions_concept(s, c); });
        if (!all) {
            spdlog::warn("realizer output drops a term, discarded: {}", s);
            continue;
        }
        out.push_back(std::move(s));
        if (out.size() == n) break;
    }
    return out;
}

GrammarResult grammar_ok(const Providers& p, const std::string& sentence) {
    return p.grammar->check(sentence);
}

}  // namespace mqag::scorers
