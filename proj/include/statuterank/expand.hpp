#pragma once

#include "statuterank/corpus.hpp"
#include "statuterank/http_client.hpp"

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace statuterank::expand {

enum class PromptKind { TermExtraction, Reformulation };

std::string_view prompt_kind_name(PromptKind kind);

/// Zero-shot prompt with exactly one `{query}` placeholder.
struct PromptTemplate {
    std::string name;      // "term-extraction" | "reformulation"
    std::string language;  // "ja" | "en"
    std::string body;

    /// The shipped prompt for `kind` in `language` ("ja" or "en").
    static PromptTemplate builtin(PromptKind kind, std::string_view language);

    /// Throws std::invalid_argument unless body holds exactly one placeholder.
    void validate() const;
    std::string render(std::string_view query) const;
    std::string hash() const;
};

struct LlmResponse {
    std::string raw_text;
    std::vector<std::string> parsed_terms;
    std::string model_name;
    bool cached = false;
    /// False when a term-extraction reply could not be parsed (terms then empty).
    bool parse_ok = true;
};

/// Pulls the list of terms out of a term-extraction reply.
///
/// Accepts a JSON object (optionally inside a ``` fence or surrounded by prose)
/// and returns its first array-of-strings property, or a bare array of strings.
/// Entries are whitespace-trimmed and empty ones dropped. nullopt on failure.
std::optional<std::vector<std::string>> parse_terms(std::string_view raw_text);

/// `original` followed by each term, joined by single spaces. Duplicates are kept.
std::string term_expand_concat(std::string_view original, std::span<const std::string> terms);

/// Sends one rendered prompt to a chat model and returns the reply text.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual std::string complete(const std::string& model, const std::string& prompt) = 0;
};

/// Chat-completions over HTTP: {model, messages:[{role:"user",content}], temperature:0}
/// -> choices[0].message.content.
class HttpChatTransport final : public ChatTransport {
public:
    explicit HttpChatTransport(http::Endpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::string complete(const std::string& model, const std::string& prompt) override;

private:
    http::Endpoint endpoint_;
};

/// Fixture mode: every call is a cache miss and fails with TransportError.
class OfflineTransport final : public ChatTransport {
public:
    std::string complete(const std::string& model, const std::string& prompt) override;
};

struct CacheEntry {
    std::string request_fingerprint;
    std::string raw_text;
    std::vector<std::string> parsed_terms;
    std::string model_name;
    std::string timestamp;
};

/// Directory of `<sha256>.json` responses keyed by (model, template hash, query text).
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    static std::string key(std::string_view model, std::string_view template_hash,
                           std::string_view query_text);
    static std::string fingerprint(std::string_view model, std::string_view template_hash,
                                   std::string_view query_text);

    std::optional<CacheEntry> get(const std::string& key) const;
    /// Atomic per file: written to a temporary and renamed into place.
    void put(const std::string& key, const CacheEntry& entry);

    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
    std::mutex write_mutex_;
};

struct LlmConfig {
    std::string model;
    std::string language = "ja";
    http::Endpoint endpoint;
    /// Optional overrides of the built-in prompts.
    std::optional<std::string> term_prompt;
    std::optional<std::string> reformulation_prompt;
    std::size_t max_in_flight = 4;
    /// "live" talks to the endpoint; "fixture" answers from the cache only.
    std::string mode = "live";

    static LlmConfig from_json(const nlohmann::json& j);
    PromptTemplate prompt(PromptKind kind) const;
};

/// Cached, deterministic front end to the expansion LLM.
class LlmClient {
public:
    LlmClient(LlmConfig config, std::shared_ptr<ChatTransport> transport,
              std::filesystem::path cache_dir);

    /// Term extraction; an unparseable reply yields parse_ok == false and no terms.
    /// Throws TransportError when the reply is neither cached nor obtainable.
    LlmResponse extract_terms(const corpus::QueryRecord& query);

    /// Reformulation; the reply is returned verbatim (possibly empty).
    LlmResponse reformulate(const corpus::QueryRecord& query);

    /// Requests that actually reached the transport.
    std::size_t network_calls() const noexcept { return network_calls_.load(); }
    const LlmConfig& config() const noexcept { return config_; }

private:
    LlmResponse ask(PromptKind kind, const corpus::QueryRecord& query);

    LlmConfig config_;
    std::shared_ptr<ChatTransport> transport_;
    ResponseCache cache_;
    std::atomic<std::size_t> network_calls_{0};
};

} // namespace statuterank::expand
