#include "mqag/metrics.hpp"

#include <fstream>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

namespace mqag::metrics {

static int choice_index(const nlohmann::json& j, const char* field) {
    int v = j.at(field).get<int>();
    if (v < 0 || v > 3) throw std::invalid_argument(std::string(field) + ": must be in 0..3");
    return v;
}

PredictionRecord prediction_from_json(const nlohmann::json& j) {
    try {
        PredictionRecord r;
        r.sample_id = j.at("sample_id").get<std::string>();
        r.q2a_pred = choice_index(j.at("q2a"), "pred");
        r.q2a_label = choice_index(j.at("q2a"), "label");
        if (j.contains("subs")) {
            for (const auto& s : j.at("subs")) {
                SubPrediction sp;
                sp.question_id = s.at("question_id").get<std::string>();
                auto m = parse_modality(s.at("modality").get<std::string>());
                if (!m) throw std::invalid_argument("modality: unknown value");
                sp.modality = *m;
                sp.pred = choice_index(s, "pred");
                sp.label = choice_index(s, "label");
                r.subs.push_back(std::move(sp));
            }
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("prediction: ") + e.what());
    }
}

nlohmann::json to_json(const PredictionRecord& r) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& s : r.subs)
        subs.push_back({{"question_id", s.question_id},
                        {"modality", std::string(to_string(s.modality))},
                        {"pred", s.pred},
                        {"label", s.label}});
    return {{"sample_id", r.sample_id}, {"q2a", {{"pred", r.q2a_pred}, {"label", r.q2a_label}}}, {"subs", subs}};
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open predictions " + path.string());
    std::vector<PredictionRecord> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(prediction_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw Error(ErrorCode::InvalidInput, path.string() + " line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

Indicators indicators(const PredictionRecord& r) {
    Indicators ind;
    ind.q2a = r.q2a_pred == r.q2a_label;
    for (const auto& s : r.subs) {
        auto [it, fresh] = ind.q2s_by.emplace(s.modality, true);
        it->second = it->second && s.pred == s.label;
    }
    for (const auto& [m, ok] : ind.q2s_by) ind.q2as_by[m] = ind.q2a && ok;
    if (ind.q2s_by.size() == kAllModalities.size()) {
        bool all = true;
        for (const auto& [m, ok] : ind.q2s_by) all = all && ok;
        ind.q2s = all;
    }
    return ind;
}

static void count(Metric& m, bool ok) {
    ++m.total;
    if (ok) ++m.correct;
}

MetricReport aggregate(const std::vector<PredictionRecord>& recs) {
    MetricReport rep;
    for (auto m : kAllModalities) {
        rep.q2s_by[m];
        rep.q2as_by[m];
    }
    for (const auto& r : recs) {
        auto ind = indicators(r);
        ++rep.samples;
        count(rep.q2a, ind.q2a);
        if (ind.q2s) count(rep.q2s, *ind.q2s);
        for (const auto& [m, ok] : ind.q2s_by) count(rep.q2s_by[m], ok);
        for (const auto& [m, ok] : ind.q2as_by) count(rep.q2as_by[m], ok);
    }
    return rep;
}

const Metric& metric(const MetricReport& r, std::string_view name) {
    if (name == "q2a") return r.q2a;
    if (name == "q2s") return r.q2s;
    for (auto m : kAllModalities) {
        auto code = std::string(modality_code(m));
        if (name == "q2s_" + code) return r.q2s_by.at(m);
        if (name == "q2as_" + code) return r.q2as_by.at(m);
    }
    throw Error(ErrorCode::InvalidInput, "unknown metric " + std::string(name));
}

nlohmann::json to_json(const MetricReport& r) {
    nlohmann::json j;
    j["samples"] = r.samples;
    j["modality_rule"] = "all sub-questions of a modality must be correct";
    j["missing_modality"] = "excluded from denominator";
    for (const char* name : kMetricNames) {
        const auto& m = metric(r, name);
        auto v = m.value();
        j["metrics"][name] = {{"value", v ? nlohmann::json(*v) : nlohmann::json(nullptr)},
                              {"correct", m.correct},
                              {"denominator", m.total}};
    }
    return j;
}

std::string format_table(const MetricReport& r) {
    std::ostringstream os;
    os << fmt::format("{:<8} {:>8} {:>8} {:>8}\n", "metric", "value", "correct", "total");
    for (const char* name : kMetricNames) {
        const auto& m = metric(r, name);
        auto v = m.value();
        os << fmt::format("{:<8} {:>8} {:>8} {:>8}\n", name, v ? fmt::format("{:.4f}", *v) : "absent", m.correct,
                          m.total);
    }
    return os.str();
}

std::map<QuestionType, MetricReport> by_question_type(const std::vector<PredictionRecord>& recs,
                                                      const std::map<std::string, QuestionType>& types) {
    std::map<QuestionType, std::vector<PredictionRecord>> parts;
    for (const auto& r : recs) {
        auto it = types.find(r.sample_id);
        if (it != types.end()) parts[it->second].push_back(r);
    }
    std::map<QuestionType, MetricReport> out;
    for (const auto& [t, rs] : parts) out.emplace(t, aggregate(rs));
    return out;
}

std::string by_type_csv(const std::map<QuestionType, MetricReport>& table) {
    std::ostringstream os;
    os << "question_type,samples";
    for (const char* name : kMetricNames) os << ',' << name << ',' << name << "_n";
    os << '\n';
    for (const auto& [t, rep] : table) {
        os << to_string(t) << ',' << rep.samples;
        for (const char* name : kMetricNames) {
            const auto& m = metric(rep, name);
            auto v = m.value();
            os << ',' << (v ? fmt::format("{:.6f}", *v) : "") << ',' << m.total;
        }
        os << '\n';
    }
    return os.str();
}

double uniformity_p_value(const std::vector<std::size_t>& counts) {
    if (counts.size() < 2) throw Error(ErrorCode::InvalidInput, "uniformity test needs at least two bins");
    double n = 0.0;
    for (auto c : counts) n += static_cast<double>(c);
    if (n == 0.0) return 1.0;
    double expected = n / static_cast<double>(counts.size());
    double stat = 0.0;
    for (auto c : counts) stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
    boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace mqag::metrics
