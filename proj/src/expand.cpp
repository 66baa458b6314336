#include "statuterank/expand.hpp"

#include "statuterank/digest.hpp"
#include "statuterank/error.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace statuterank::expand {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::string_view kPlaceholder = "{query}";

constexpr std::string_view kTermPromptEn =
    "Given a legal situation, find the relevant facts and legal concepts\n"
    "relevant to that situation:{query}\n"
    "\n"
    "The output must be formatted as a JSON instance conforming to\n"
    "the JSON schema below. For example, the schema\n"
    "{\n"
    "  properties: {\n"
    "    foo: {\n"
    "      title: Foo,\n"
    "      description: a list of strings,\n"
    "      type: array,\n"
    "      items: {type: string}\n"
    "    }},\n"
    "  required: [foo]}";

constexpr std::string_view kReformulationPromptEn =
    "Given a legal situation, extract the relevant facts and legal\n"
    "concepts relevant to that situation:{query}";

constexpr std::string_view kTermPromptJa =
    "法的な状況が与えられた場合、その状況に関連す\n"
    "る適切な事実と法的概念を抽出します:{query}\n"
    "\n"
    "出力は、以下のJSONスキーマに準拠するJSONイン\n"
    "スタンスとしてフォーマットする必要がありま\n"
    "す。例として、スキーマ \n"
    "{\n"
    "  properties: {\n"
    "    foo: {\n"
    "      title: Foo,\n"
    "      description: a list of strings,\n"
    "      type: array,\n"
    "      items: {type: string}\n"
    "    }},\n"
    "  required: [foo]\n"
    "}\n"
    "の場合、オブジェクト {foo: [bar, baz]}";

constexpr std::string_view kReformulationPromptJa =
    "法的な状況が与えられた場合、その状況に関連す\n"
    "る適切な事実と法的概念を抽出します:{query}";

std::size_t count_placeholders(std::string_view body) {
    std::size_t n = 0;
    for (auto pos = body.find(kPlaceholder); pos != std::string_view::npos;
         pos = body.find(kPlaceholder, pos + kPlaceholder.size()))
        ++n;
    return n;
}

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

// Contents of the first ``` fenced block, or the input when there is none.
std::string_view unfence(std::string_view text) {
    auto open = text.find("```");
    if (open == std::string_view::npos) return text;
    auto body = text.find('\n', open);
    if (body == std::string_view::npos) return text;
    auto close = text.find("```", body + 1);
    if (close == std::string_view::npos) return text.substr(body + 1);
    return text.substr(body + 1, close - body - 1);
}

std::optional<ordered_json> try_parse(std::string_view text) {
    auto j = ordered_json::parse(text.begin(), text.end(), nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return j;
}

std::optional<std::vector<std::string>> as_string_list(const ordered_json& j) {
    if (!j.is_array()) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string()) return std::nullopt;
        auto t = trim(v.get_ref<const std::string&>());
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

} // namespace

std::string_view prompt_kind_name(PromptKind kind) {
    return kind == PromptKind::TermExtraction ? "term-extraction" : "reformulation";
}

PromptTemplate PromptTemplate::builtin(PromptKind kind, std::string_view language) {
    PromptTemplate t;
    t.name = std::string(prompt_kind_name(kind));
    t.language = std::string(language);
    if (language == "ja") {
        t.body = std::string(kind == PromptKind::TermExtraction ? kTermPromptJa : kReformulationPromptJa);
    } else if (language == "en") {
        t.body = std::string(kind == PromptKind::TermExtraction ? kTermPromptEn : kReformulationPromptEn);
    } else {
        throw std::invalid_argument("no built-in prompt for language \"" + std::string(language) + "\"");
    }
    return t;
}

void PromptTemplate::validate() const {
    if (count_placeholders(body) != 1)
        throw std::invalid_argument("prompt \"" + name + "\" must contain exactly one {query} placeholder");
}

std::string PromptTemplate::render(std::string_view query) const {
    validate();
    std::string out = body;
    out.replace(out.find(kPlaceholder), kPlaceholder.size(), query);
    return out;
}

std::string PromptTemplate::hash() const { return sha256_hex(body); }

std::optional<std::vector<std::string>> parse_terms(std::string_view raw_text) {
    auto text = trim(unfence(raw_text));
    auto parsed = try_parse(text);
    if (!parsed) {
        auto b = text.find('{'), e = text.rfind('}');
        if (b != std::string_view::npos && e != std::string_view::npos && e > b)
            parsed = try_parse(text.substr(b, e - b + 1));
    }
    if (!parsed) {
        auto b = text.find('['), e = text.rfind(']');
        if (b != std::string_view::npos && e != std::string_view::npos && e > b)
            parsed = try_parse(text.substr(b, e - b + 1));
    }
    if (!parsed) return std::nullopt;

    if (parsed->is_array()) return as_string_list(*parsed);
    if (!parsed->is_object()) return std::nullopt;
    for (const auto& [key, value] : parsed->items()) {
        if (auto list = as_string_list(value)) return list;
    }
    return std::nullopt;
}

std::string term_expand_concat(std::string_view original, std::span<const std::string> terms) {
    std::string out(original);
    for (const auto& t : terms) {
        out.push_back(' ');
        out += t;
    }
    return out;
}

std::string HttpChatTransport::complete(const std::string& model, const std::string& prompt) {
    json body = {{"model", model},
                 {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                 {"temperature", 0}};
    json reply = http::post_json(endpoint_, body);
    try {
        const auto& content = reply.at("choices").at(0).at("message").at("content");
        return content.is_null() ? std::string{} : content.get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("unexpected chat-completion reply: ") + e.what());
    }
}

std::string OfflineTransport::complete(const std::string& model, const std::string&) {
    throw TransportError("no cached response for model \"" + model + "\" and network access is disabled");
}

std::string ResponseCache::fingerprint(std::string_view model, std::string_view template_hash,
                                       std::string_view query_text) {
    ordered_json j = {{"model", model}, {"template_sha256", template_hash}, {"query", query_text}};
    return j.dump();
}

std::string ResponseCache::key(std::string_view model, std::string_view template_hash,
                               std::string_view query_text) {
    return sha256_hex(fingerprint(model, template_hash, query_text));
}

std::optional<CacheEntry> ResponseCache::get(const std::string& key) const {
    const auto path = dir_ / (key + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    try {
        json j = json::parse(in);
        CacheEntry e;
        e.request_fingerprint = j.at("request_fingerprint").get<std::string>();
        e.raw_text = j.at("raw_text").get<std::string>();
        e.parsed_terms = j.value("parsed_terms", std::vector<std::string>{});
        e.model_name = j.at("model_name").get<std::string>();
        e.timestamp = j.value("timestamp", std::string{});
        return e;
    } catch (const json::exception& e) {
        throw DataError("corrupt cache entry " + path.string() + ": " + e.what());
    }
}

void ResponseCache::put(const std::string& key, const CacheEntry& entry) {
    ordered_json j = {{"request_fingerprint", entry.request_fingerprint},
                      {"raw_text", entry.raw_text},
                      {"parsed_terms", entry.parsed_terms},
                      {"model_name", entry.model_name},
                      {"timestamp", entry.timestamp}};
    std::lock_guard lock(write_mutex_);
    std::filesystem::create_directories(dir_);
    const auto final_path = dir_ / (key + ".json");
    const auto tmp_path = dir_ / (key + ".json.tmp");
    {
        std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp_path.string());
        out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp_path, final_path);
}

LlmConfig LlmConfig::from_json(const json& j) {
    LlmConfig c;
    c.model = j.value("model", std::string{});
    c.language = j.value("language", std::string("ja"));
    c.mode = j.value("mode", std::string("live"));
    c.max_in_flight = j.value("max_in_flight", std::size_t{4});
    c.endpoint = http::Endpoint::from_json(j, "/v1/chat/completions");
    if (j.contains("term_prompt")) c.term_prompt = j.at("term_prompt").get<std::string>();
    if (j.contains("reformulation_prompt"))
        c.reformulation_prompt = j.at("reformulation_prompt").get<std::string>();
    if (c.mode != "live" && c.mode != "fixture")
        throw std::invalid_argument("llm.mode must be \"live\" or \"fixture\"");
    if (c.model.empty()) throw std::invalid_argument("llm.model is required");
    if (c.max_in_flight == 0) throw std::invalid_argument("llm.max_in_flight must be >= 1");
    c.prompt(PromptKind::TermExtraction).validate();
    c.prompt(PromptKind::Reformulation).validate();
    return c;
}

PromptTemplate LlmConfig::prompt(PromptKind kind) const {
    auto t = PromptTemplate::builtin(kind, language);
    const auto& custom = kind == PromptKind::TermExtraction ? term_prompt : reformulation_prompt;
    if (custom) t.body = *custom;
    return t;
}

LlmClient::LlmClient(LlmConfig config, std::shared_ptr<ChatTransport> transport,
                     std::filesystem::path cache_dir)
    : config_(std::move(config)), transport_(std::move(transport)), cache_(std::move(cache_dir)) {
    if (!transport_) throw std::invalid_argument("LlmClient needs a transport");
}

LlmResponse LlmClient::extract_terms(const corpus::QueryRecord& query) {
    return ask(PromptKind::TermExtraction, query);
}

LlmResponse LlmClient::reformulate(const corpus::QueryRecord& query) {
    return ask(PromptKind::Reformulation, query);
}

LlmResponse LlmClient::ask(PromptKind kind, const corpus::QueryRecord& query) {
    const auto prompt = config_.prompt(kind);
    const auto template_hash = prompt.hash();
    const auto key = ResponseCache::key(config_.model, template_hash, query.original_text);

    LlmResponse response;
    response.model_name = config_.model;
    if (auto hit = cache_.get(key)) {
        response.raw_text = std::move(hit->raw_text);
        response.cached = true;
    } else {
        ++network_calls_;
        response.raw_text = transport_->complete(config_.model, prompt.render(query.original_text));
    }

    if (kind == PromptKind::TermExtraction) {
        auto terms = parse_terms(response.raw_text);
        response.parse_ok = terms.has_value();
        if (terms) response.parsed_terms = std::move(*terms);
    }

    if (!response.cached) {
        cache_.put(key, {ResponseCache::fingerprint(config_.model, template_hash, query.original_text),
                         response.raw_text, response.parsed_terms, config_.model, utc_timestamp()});
    }
    return response;
}

} // namespace statuterank::expand
