#include "mqag/annotate.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "mqag/filter.hpp"
#include "mqag/text.hpp"

namespace mqag::annotate {

VerificationTask task_from_json(const nlohmann::json& j) {
    VerificationTask t{subquestion_from_json(j)};
    if (t.question.choices.size() != static_cast<std::size_t>(kContentChoices))
        throw std::invalid_argument("choices: a verification task needs exactly 7");
    return t;
}

nlohmann::json public_view(const VerificationTask& t) {
    nlohmann::json choices = nlohmann::json::array();
    for (int i = 0; i < kContentChoices; ++i)
        choices.push_back({{"id", i}, {"text", t.question.choices[static_cast<std::size_t>(i)]}});
    choices.push_back({{"id", kNoneOfTheAbove}, {"text", "None of the above"}, {"sentinel", true}});
    choices.push_back({{"id", kDoNotKnow}, {"text", "I do not know how to answer"}, {"sentinel", true}});
    return {{"task_id", t.task_id()}, {"image_id", t.question.image_id}, {"stem", t.question.stem},
            {"choices", choices}};
}

nlohmann::json to_json(const Annotation& a) {
    nlohmann::json corrected = nlohmann::json::object();
    for (const auto& [id, txt] : a.corrected) corrected[std::to_string(id)] = txt;
    nlohmann::json j{{"annotator_id", a.annotator_id},
                     {"selected", a.selected},
                     {"corrected_texts", corrected},
                     {"question_ok", a.question_ok}};
    if (a.corrected_stem) j["corrected_stem"] = *a.corrected_stem;
    if (a.custom_answer) j["custom_answer"] = *a.custom_answer;
    return j;
}

Annotation annotation_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("body must be a JSON object");
    Annotation a;
    try {
        a.annotator_id = j.at("annotator_id").get<std::string>();
        if (j.contains("selected")) a.selected = j.at("selected").get<std::set<int>>();
        if (j.contains("corrected_texts"))
            for (const auto& [k, v] : j.at("corrected_texts").items()) {
                std::size_t used = 0;
                int id = std::stoi(k, &used);
                if (used != k.size()) throw std::invalid_argument("corrected_texts: bad choice id " + k);
                a.corrected[id] = v.get<std::string>();
            }
        if (j.contains("corrected_stem") && !j.at("corrected_stem").is_null())
            a.corrected_stem = j.at("corrected_stem").get<std::string>();
        if (j.contains("custom_answer") && !j.at("custom_answer").is_null())
            a.custom_answer = j.at("custom_answer").get<std::string>();
        if (j.contains("question_ok")) a.question_ok = j.at("question_ok").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(e.what());
    } catch (const std::out_of_range&) {
        throw std::invalid_argument("corrected_texts: choice id out of range");
    }
    if (text::trim(a.annotator_id).empty()) throw std::invalid_argument("annotator_id: must be non-empty");
    for (int id : a.selected)
        if (id < 0 || id > kDoNotKnow) throw std::invalid_argument("selected: choice id out of range");
    for (const auto& [id, txt] : a.corrected)
        if (id < 0 || id >= kContentChoices) throw std::invalid_argument("corrected_texts: not a content choice");
    if (a.question_ok) {
        if (a.selected.empty()) throw std::invalid_argument("selected: at least one choice is required");
        bool none = a.selected.contains(kNoneOfTheAbove);
        if (none && (!a.custom_answer || text::trim(*a.custom_answer).empty()))
            throw std::invalid_argument("custom_answer: required with None of the above");
        if (!none && a.custom_answer) throw std::invalid_argument("custom_answer: only with None of the above");
    }
    return a;
}

// --- aggregation ------------------------------------------------------------

namespace {

std::map<int, std::size_t> tally(const std::vector<Annotation>& batch) {
    std::map<int, std::size_t> votes;
    for (const auto& a : batch) {
        if (!a.question_ok) continue;
        for (int id : a.selected) ++votes[id];
    }
    return votes;
}

// An edit is applied only when a majority of annotators typed the same text.
std::optional<std::string> majority_edit(const std::vector<std::optional<std::string>>& edits) {
    std::map<std::string, std::size_t> counts;
    for (const auto& e : edits)
        if (e && !text::trim(*e).empty()) ++counts[text::trim(*e)];
    for (const auto& [txt, n] : counts)
        if (n >= kMinVotes) return txt;
    return std::nullopt;
}

}  // namespace

Outcome aggregate_task(const VerificationTask& task, const std::vector<Annotation>& batch) {
    const int generated = task.question.label_index;
    auto votes = tally(batch);
    std::optional<int> winner;
    for (const auto& [id, n] : votes) {
        if (n < kMinVotes) continue;
        if (!winner) {
            winner = id;
            continue;
        }
        auto best = votes[*winner];
        if (n > best || (n == best && id == generated && *winner != generated)) winner = id;
    }
    std::vector<std::string> customs;
    for (const auto& a : batch)
        if (a.custom_answer) customs.push_back(*a.custom_answer);

    if (!winner) return Rejected{task.task_id(), "no choice selected by at least three annotators", customs};
    if (*winner == kNoneOfTheAbove) return Rejected{task.task_id(), "none of the above won", customs};
    if (*winner == kDoNotKnow) return Rejected{task.task_id(), "annotators could not answer", customs};

    std::vector<int> eligible;
    for (int i = 0; i < kContentChoices; ++i)
        if (!votes.contains(i)) eligible.push_back(i);
    if (eligible.size() < kFinalDistractors)
        return Rejected{task.task_id(), "fewer than three never-selected choices", customs};
    // Generated distractors first, in task order.
    std::stable_partition(eligible.begin(), eligible.end(), [&](int id) { return id != generated; });
    eligible.resize(kFinalDistractors);

    auto text_of = [&](int id) {
        std::vector<std::optional<std::string>> edits;
        for (const auto& a : batch) {
            auto it = a.corrected.find(id);
            edits.push_back(it == a.corrected.end() ? std::nullopt : std::optional(it->second));
        }
        return majority_edit(edits).value_or(task.question.choices[static_cast<std::size_t>(id)]);
    };

    Finalized f;
    f.winner = *winner;
    f.distractors = eligible;
    SubQuestion q = task.question;
    std::vector<std::optional<std::string>> stems;
    for (const auto& a : batch) stems.push_back(a.corrected_stem);
    q.stem = majority_edit(stems).value_or(q.stem);

    std::vector<int> order{*winner};
    order.insert(order.end(), eligible.begin(), eligible.end());
    filter::shuffle(order, text::fnv1a64(task.task_id()));
    q.choices.clear();
    for (std::size_t i = 0; i < order.size(); ++i) {
        q.choices.push_back(text_of(order[i]));
        if (order[i] == *winner) q.label_index = static_cast<int>(i);
    }
    q.provenance["verification"] = {{"winner", *winner},
                                    {"generated_label", generated},
                                    {"votes", votes[*winner]},
                                    {"annotators", batch.size()}};
    f.question = std::move(q);
    return f;
}

AnnotationMetrics annotation_metrics(const std::map<std::string, std::vector<Annotation>>& batches,
                                     const std::map<std::string, int>& labels) {
    AnnotationMetrics m;
    std::size_t individual_hits = 0, group_hits = 0, top2_hits = 0;
    double iaa_sum = 0.0;
    for (const auto& [task_id, raw] : batches) {
        auto lab = labels.find(task_id);
        if (lab == labels.end()) continue;
        std::vector<const Annotation*> batch;
        for (const auto& a : raw)
            if (a.question_ok) batch.push_back(&a);
        if (batch.empty()) continue;
        ++m.tasks;
        for (const auto* a : batch) {
            ++m.annotations;
            if (a->selected == std::set<int>{lab->second}) ++individual_hits;
        }
        auto votes = tally(raw);
        std::vector<std::pair<int, std::size_t>> ranked(votes.begin(), votes.end());
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& x, const auto& y) { return x.second > y.second; });
        if (!ranked.empty() && ranked[0].first == lab->second) ++group_hits;
        for (std::size_t i = 0; i < std::min<std::size_t>(2, ranked.size()); ++i)
            if (ranked[i].first == lab->second) ++top2_hits;

        std::size_t pairs = 0, agree = 0;
        for (std::size_t i = 0; i < batch.size(); ++i)
            for (std::size_t k = i + 1; k < batch.size(); ++k) {
                ++pairs;
                if (batch[i]->selected == batch[k]->selected) ++agree;
            }
        iaa_sum += pairs == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(pairs);
    }
    if (m.tasks == 0) return m;
    auto tasks = static_cast<double>(m.tasks);
    m.individual_acc = static_cast<double>(individual_hits) / static_cast<double>(m.annotations);
    m.group_acc = static_cast<double>(group_hits) / tasks;
    m.group_top2_recall = static_cast<double>(top2_hits) / tasks;
    m.iaa = iaa_sum / tasks;
    return m;
}

nlohmann::json to_json(const AnnotationMetrics& m) {
    return {{"individual_acc", m.individual_acc},
            {"group_acc", m.group_acc},
            {"group_top2_recall", m.group_top2_recall},
            {"iaa", m.iaa},
            {"iaa_definition", "mean pairwise exact-selection-set agreement"},
            {"tasks", m.tasks},
            {"annotations", m.annotations}};
}

// --- service ----------------------------------------------------------------

namespace {

void durable_append(const std::filesystem::path& path, const std::string& line) {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw Error(ErrorCode::Io, "cannot open " + path.string() + ": " + std::strerror(errno));
    std::string buf = line + "\n";
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
        auto n = ::write(fd, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            throw Error(ErrorCode::Io, "write failed on " + path.string());
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        ::close(fd);
        throw Error(ErrorCode::Io, "fsync failed on " + path.string());
    }
    ::close(fd);
}

std::string safe_name(const std::string& id) {
    std::string out;
    for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out + "-" + std::to_string(text::fnv1a32(id));
}

}  // namespace

AnnotationService::AnnotationService(std::vector<VerificationTask> tasks, std::filesystem::path state_dir)
    : dir_(std::move(state_dir)) {
    std::filesystem::create_directories(dir_ / "journal");
    for (auto& t : tasks) {
        auto id = t.task_id();
        if (!tasks_.emplace(id, Entry{std::move(t), {}, {}}).second)
            throw Error(ErrorCode::InvalidInput, "duplicate task id " + id);
    }
    for (auto& [id, e] : tasks_) {
        auto path = journal_path(id);
        if (!std::filesystem::exists(path)) continue;
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                apply(e, annotation_from_json(nlohmann::json::parse(line)));
            } catch (const std::exception& ex) {
                spdlog::warn("journal {}: ignoring unreadable entry: {}", path.string(), ex.what());
            }
        }
    }
}

std::filesystem::path AnnotationService::journal_path(const std::string& task_id) const {
    return dir_ / "journal" / (safe_name(task_id) + ".jsonl");
}

void AnnotationService::apply(Entry& e, const Annotation& a) {
    e.annotators.insert(a.annotator_id);
    if (a.question_ok) e.counted.push_back(a);
}

std::optional<std::string> AnnotationService::next_task(const std::string& annotator) const {
    std::lock_guard lock(mu_);
    for (const auto& [id, e] : tasks_)
        if (e.counted.size() < kAnnotatorsPerTask && !e.annotators.contains(annotator)) return id;
    return std::nullopt;
}

std::optional<nlohmann::json> AnnotationService::task_json(const std::string& task_id) const {
    std::lock_guard lock(mu_);
    auto it = tasks_.find(task_id);
    if (it == tasks_.end()) return std::nullopt;
    auto j = public_view(it->second.task);
    nlohmann::json anns = nlohmann::json::array();
    for (const auto& a : it->second.counted) anns.push_back(to_json(a));
    j["annotations"] = anns;
    j["state"] = it->second.counted.size() >= kAnnotatorsPerTask ? "complete" : "open";
    return j;
}

SubmitResult AnnotationService::submit(const std::string& task_id, const Annotation& a) {
    std::lock_guard lock(mu_);
    auto it = tasks_.find(task_id);
    if (it == tasks_.end()) return {SubmitStatus::NotFound, "unknown task " + task_id, false};
    auto& e = it->second;
    if (e.annotators.contains(a.annotator_id))
        return {SubmitStatus::Conflict, a.annotator_id + " already answered " + task_id,
                e.counted.size() >= kAnnotatorsPerTask};
    if (e.counted.size() >= kAnnotatorsPerTask) return {SubmitStatus::Conflict, task_id + " is complete", true};
    auto line = to_json(a).dump();
    durable_append(journal_path(task_id), line);
    if (!a.question_ok) {
        nlohmann::json r{{"task_id", task_id}, {"annotation", to_json(a)}};
        durable_append(dir_ / "review_queue.jsonl", r.dump());
    }
    apply(e, a);
    return {SubmitStatus::Accepted, "", e.counted.size() >= kAnnotatorsPerTask};
}

bool AnnotationService::complete(const std::string& task_id) const {
    std::lock_guard lock(mu_);
    auto it = tasks_.find(task_id);
    return it != tasks_.end() && it->second.counted.size() >= kAnnotatorsPerTask;
}

std::vector<Outcome> AnnotationService::outcomes() const {
    std::lock_guard lock(mu_);
    std::vector<Outcome> out;
    for (const auto& [id, e] : tasks_)
        if (e.counted.size() >= kAnnotatorsPerTask) out.push_back(aggregate_task(e.task, e.counted));
    return out;
}

std::string AnnotationService::export_jsonl() const {
    std::lock_guard export_lock(export_mu_);
    std::string body;
    for (const auto& o : outcomes())
        if (const auto* f = std::get_if<Finalized>(&o)) body += nlohmann::json(f->question).dump() + "\n";
    auto tmp = dir_ / "export.jsonl.tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << body;
    }
    std::filesystem::rename(tmp, dir_ / "export.jsonl");
    return body;
}

std::map<std::string, std::vector<Annotation>> AnnotationService::batches() const {
    std::lock_guard lock(mu_);
    std::map<std::string, std::vector<Annotation>> out;
    for (const auto& [id, e] : tasks_)
        if (!e.counted.empty()) out[id] = e.counted;
    return out;
}

std::map<std::string, int> AnnotationService::labels() const {
    std::lock_guard lock(mu_);
    std::map<std::string, int> out;
    for (const auto& [id, e] : tasks_) out[id] = e.task.question.label_index;
    return out;
}

std::vector<VerificationTask> load_tasks(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open tasks " + path.string());
    std::vector<VerificationTask> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(task_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw Error(ErrorCode::InvalidInput, path.string() + " line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

// --- HTTP -------------------------------------------------------------------

struct Server::Impl {
    AnnotationService& service;
    httplib::Server http;
    std::thread thread;

    explicit Impl(AnnotationService& s) : service(s) {}
};

static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

static void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
}

Server::Server(AnnotationService& service) : impl_(std::make_unique<Impl>(service)) {
    auto& svc = impl_->service;
    auto& http = impl_->http;

    http.Get("/tasks/next", [&svc](const httplib::Request& req, httplib::Response& res) {
        auto annotator = req.get_param_value("annotator");
        if (text::trim(annotator).empty()) return send_error(res, 400, "annotator query parameter is required");
        auto id = svc.next_task(annotator);
        if (!id) {
            res.status = 204;
            return;
        }
        send_json(res, 200, *svc.task_json(*id));
    });

    http.Get(R"(/tasks/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
        auto j = svc.task_json(req.matches[1]);
        if (!j) return send_error(res, 404, "unknown task");
        send_json(res, 200, *j);
    });

    http.Post(R"(/tasks/([^/]+)/annotations)", [&svc](const httplib::Request& req, httplib::Response& res) {
        Annotation a;
        try {
            a = annotation_from_json(nlohmann::json::parse(req.body));
        } catch (const std::exception& e) {
            return send_error(res, 400, e.what());
        }
        SubmitResult r;
        try {
            r = svc.submit(req.matches[1], a);
        } catch (const Error& e) {
            return send_error(res, 500, e.what());
        }
        switch (r.status) {
            case SubmitStatus::Accepted:
                return send_json(res, 200, {{"state", r.complete ? "complete" : "open"}});
            case SubmitStatus::Conflict: return send_error(res, 409, r.message);
            case SubmitStatus::NotFound: return send_error(res, 404, r.message);
            case SubmitStatus::Invalid: return send_error(res, 400, r.message);
        }
    });

    http.Get("/export", [&svc](const httplib::Request&, httplib::Response& res) {
        res.status = 200;
        res.set_content(svc.export_jsonl(), "application/x-ndjson");
    });
}

Server::~Server() { stop(); }

int Server::start(const std::string& host, int port, bool block) {
    auto& http = impl_->http;
    int bound = port;
    if (port == 0) {
        bound = http.bind_to_any_port(host);
    } else if (!http.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
    if (block) {
        http.listen_after_bind();
    } else {
        impl_->thread = std::thread([&http] { http.listen_after_bind(); });
        http.wait_until_ready();
    }
    return bound;
}

void Server::stop() {
    if (!impl_) return;
    impl_->http.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace mqag::annotate
