#include "mqag/http.hpp"

#include <fstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "mqag/core.hpp"
#include "mqag/text.hpp"

namespace mqag::http {

Endpoint Endpoint::parse(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw Error(ErrorCode::InvalidInput, "endpoint needs a scheme: " + url);
    auto path_start = url.find('/', scheme + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

JsonClient::JsonClient(const std::string& url, std::chrono::milliseconds timeout, RetryPolicy retry)
    : url_(url), endpoint_(Endpoint::parse(url)), timeout_(timeout), retry_(retry) {}

nlohmann::json JsonClient::post(const nlohmann::json& body) const {
    const std::string payload = body.dump();
    auto backoff = retry_.initial_backoff;
    std::string last_error;
    for (int attempt = 0; attempt <= retry_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Client cli(endpoint_.base);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
        auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
        cli.set_connection_timeout(secs.count(), usecs.count());
        cli.set_read_timeout(secs.count(), usecs.count());
        cli.set_write_timeout(secs.count(), usecs.count());
        auto res = cli.Post(endpoint_.path, payload, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status >= 400)
            throw Error(ErrorCode::InvalidInput,
                        url_ + " rejected request: HTTP " + std::to_string(res->status));
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error&) {
            throw Error(ErrorCode::Transport, url_ + " returned non-JSON body");
        }
    }
    throw Error(ErrorCode::Transport, url_ + ": " + last_error + " after " +
                                          std::to_string(retry_.retries) + " retries");
}

ResponseCache::ResponseCache(std::optional<std::filesystem::path> path) : path_(std::move(path)) {
    if (!path_ || !std::filesystem::exists(*path_)) return;
    std::ifstream in(*path_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            entries_[j.at("key").get<std::string>()] = j.at("response");
        } catch (const std::exception& e) {
            spdlog::warn("ignoring unreadable cache line in {}: {}", path_->string(), e.what());
        }
    }
}

std::string ResponseCache::key(const std::string& provider, const nlohmann::json& request) {
    // nlohmann::json objects are key-sorted, so dump() is a canonical form.
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(text::fnv1a64(request.dump())));
    return provider + ":" + buf;
}

std::optional<nlohmann::json> ResponseCache::get(const std::string& provider,
                                                 const nlohmann::json& request) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key(provider, request));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::put(const std::string& provider, const nlohmann::json& request,
                        const nlohmann::json& response) {
    auto k = key(provider, request);
    std::lock_guard lock(mu_);
    if (!entries_.emplace(k, response).second) return;
    if (!path_) return;
    std::ofstream out(*path_, std::ios::app);
    out << nlohmann::json{{"key", k}, {"response", response}}.dump() << '\n';
}

std::size_t ResponseCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

}  // namespace mqag::http
