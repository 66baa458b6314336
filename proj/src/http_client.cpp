#include "statuterank/http_client.hpp"

#include "statuterank/error.hpp"

#include <cstdlib>
#include <thread>

#include "httplib.h"

namespace statuterank::http {

using nlohmann::json;

Endpoint Endpoint::from_json(const json& j, std::string default_path) {
    Endpoint e;
    e.base_url = j.value("base_url", std::string{});
    e.path = j.value("path", std::move(default_path));
    e.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60'000));
    e.auth_env = j.value("auth_env", std::string{});
    e.auth_header = j.value("auth_header", std::string("Authorization"));
    e.auth_prefix = j.value("auth_prefix", std::string("Bearer "));
    e.max_attempts = j.value("max_attempts", 3);
    e.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", 1'000));
    return e;
}

namespace {

bool retryable(int status) { return status == 429 || status >= 500; }

} // namespace

json post_json(const Endpoint& endpoint, const json& body) {
    if (endpoint.base_url.empty()) throw TransportError("endpoint has no base_url");

    httplib::Headers headers;
    if (!endpoint.auth_env.empty()) {
        const char* token = std::getenv(endpoint.auth_env.c_str());
        if (!token || !*token)
            throw TransportError("environment variable " + endpoint.auth_env + " is not set");
        headers.emplace(endpoint.auth_header, endpoint.auth_prefix + token);
    }

    const std::string payload = body.dump();
    const int attempts = std::max(1, endpoint.max_attempts);
    auto backoff = endpoint.initial_backoff;
    std::string last_error;

    for (int attempt = 1; attempt <= attempts; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }

        httplib::Client client(endpoint.base_url);
        const auto secs = endpoint.timeout.count() / 1000;
        const auto usecs = (endpoint.timeout.count() % 1000) * 1000;
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);

        auto res = client.Post(endpoint.path, headers, payload, "application/json");
        if (!res) {
            last_error = "request to " + endpoint.base_url + endpoint.path + " failed: " +
                         httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = endpoint.base_url + endpoint.path + " returned HTTP " +
                         std::to_string(res->status) + ": " + res->body.substr(0, 200);
            if (retryable(res->status)) continue;
            throw TransportError(last_error);
        }
        try {
            return json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw TransportError(endpoint.base_url + endpoint.path + " returned invalid JSON: " + e.what());
        }
    }
    throw TransportError(last_error + " (after " + std::to_string(attempts) + " attempts)");
}

} // namespace statuterank::http
