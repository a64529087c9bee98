#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include <json.hpp>

namespace mqag::http {

struct RetryPolicy {
    int retries = 2;
    std::chrono::milliseconds initial_backoff{100};  // doubled after every attempt
};

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;  // always starts with '/'

    static Endpoint parse(const std::string& url);
};

/// JSON-over-HTTP POST with the shared retry policy. Connection failures,
/// timeouts and 5xx responses are retried; when retries are exhausted an
/// Error(Transport) is thrown. 4xx responses fail immediately with
/// Error(InvalidInput).
class JsonClient {
public:
    JsonClient(const std::string& url, std::chrono::milliseconds timeout, RetryPolicy retry = {});

    nlohmann::json post(const nlohmann::json& body) const;

    const std::string& url() const { return url_; }

private:
    std::string url_;
    Endpoint endpoint_;
    std::chrono::milliseconds timeout_;
    RetryPolicy retry_;
};

/// Response cache keyed by (provider, hash of the normalized request). Backed
/// by an append-only JSONL file when a path is given; writes are serialized.
class ResponseCache {
public:
    explicit ResponseCache(std::optional<std::filesystem::path> path);

    std::optional<nlohmann::json> get(const std::string& provider, const nlohmann::json& request) const;
    void put(const std::string& provider, const nlohmann::json& request, const nlohmann::json& response);

    std::size_t size() const;

    static std::string key(const std::string& provider, const nlohmann::json& request);

private:
    std::optional<std::filesystem::path> path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, nlohmann::json> entries_;
};

}  // namespace mqag::http
