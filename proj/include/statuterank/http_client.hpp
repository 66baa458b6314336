#pragma once

#include <chrono>
#include <string>

#include "json.hpp"

namespace statuterank::http {

/// Where and how to POST JSON. Secrets are never stored here: `auth_env` names
/// the environment variable holding the token.
struct Endpoint {
    std::string base_url;  // scheme://host[:port], e.g. "https://api.openai.com"
    std::string path;      // e.g. "/v1/chat/completions"
    std::chrono::milliseconds timeout{60'000};
    std::string auth_env;                      // empty: no auth header
    std::string auth_header = "Authorization";
    std::string auth_prefix = "Bearer ";
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{1'000};  // doubled after each failed attempt

    static Endpoint from_json(const nlohmann::json& j, std::string default_path);
};

/// POSTs `body` and returns the parsed JSON reply.
///
/// Connection failures, HTTP 429 and 5xx are retried up to `max_attempts` with
/// exponential backoff. Other non-2xx replies and unparseable bodies fail at once.
/// Throws TransportError.
nlohmann::json post_json(const Endpoint& endpoint, const nlohmann::json& body);

} // namespace statuterank::http
