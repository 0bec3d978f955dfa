#include "optloop/llm.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "optloop/source.hpp"

using nlohmann::json;

namespace optloop {

std::string role_name(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

void Conversation::set_system(std::string content) {
    if (!messages_.empty()) {
        throw std::logic_error("system message must be first in the conversation");
    }
    messages_.push_back({Role::system, std::move(content)});
}

void Conversation::push_user(std::string content) {
    if (content.empty()) throw std::logic_error("user message content must be non-empty");
    if (!messages_.empty() && messages_.back().role == Role::user) {
        throw std::logic_error("user message cannot follow a user message");
    }
    messages_.push_back({Role::user, std::move(content)});
}

void Conversation::push_assistant(std::string content) {
    if (content.empty()) throw std::logic_error("assistant message content must be non-empty");
    if (messages_.empty() || messages_.back().role != Role::user) {
        throw std::logic_error("assistant message must follow a user message");
    }
    messages_.push_back({Role::assistant, std::move(content)});
}

bool Conversation::ends_with_user() const {
    return !messages_.empty() && messages_.back().role == Role::user;
}

std::string provider_kind_name(ProviderKind kind) {
    switch (kind) {
        case ProviderKind::openai_compatible: return "openai_compatible";
        case ProviderKind::anthropic_compatible: return "anthropic_compatible";
        case ProviderKind::replay: return "replay";
    }
    return "replay";
}

std::optional<ProviderKind> provider_kind_from(const std::string& name) {
    if (name == "openai_compatible") return ProviderKind::openai_compatible;
    if (name == "anthropic_compatible") return ProviderKind::anthropic_compatible;
    if (name == "replay") return ProviderKind::replay;
    return std::nullopt;
}

double cost_usd(const Usage& usage, const ProviderSpec& spec) {
    return static_cast<double>(usage.input_tokens) * spec.price_per_million_input / 1e6 +
           static_cast<double>(usage.output_tokens) * spec.price_per_million_output / 1e6;
}

// Segments are the text between delimiter lines, with the newline that
// precedes a delimiter stripped; empty segments are skipped so fixtures may
// end with a trailing delimiter.
std::vector<std::string> split_replay_script(const std::string& text) {
    std::vector<std::string> responses;
    std::string current;
    for (const std::string& line : split_lines(text)) {
        if (line == "---8<---") {
            if (!current.empty()) responses.push_back(current);
            current.clear();
        } else {
            if (!current.empty()) current += '\n';
            current += line;
        }
    }
    if (!current.empty()) responses.push_back(current);
    return responses;
}

namespace {

long long estimate_tokens(std::size_t chars) { return static_cast<long long>(chars / 4); }

class ReplayBackend : public ChatBackend {
public:
    explicit ReplayBackend(const ProviderSpec& spec) {
        FileText file;
        try {
            file = read_text_file(spec.replay_file);
        } catch (const std::exception&) {
            throw TransportError("cannot read replay file: " + spec.replay_file);
        }
        responses_ = split_replay_script(file.text);
    }

    Completion complete(const Conversation& conv) override {
        if (cursor_ >= responses_.size()) throw ReplayExhausted(static_cast<int>(cursor_));
        const std::string& response = responses_[cursor_++];
        std::size_t input_chars = 0;
        for (const auto& m : conv.messages()) input_chars += m.content.size();
        Completion completion;
        completion.message = {Role::assistant, response};
        completion.usage = {estimate_tokens(input_chars), estimate_tokens(response.size())};
        return completion;
    }

private:
    std::vector<std::string> responses_;
    std::size_t cursor_ = 0;
};

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& endpoint) {
    std::size_t scheme = endpoint.find("://");
    if (scheme == std::string::npos) return {endpoint, "/"};
    std::size_t slash = endpoint.find('/', scheme + 3);
    if (slash == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

std::optional<double> parse_retry_after(const httplib::Response& res) {
    if (!res.has_header("Retry-After")) return std::nullopt;
    try {
        return std::stod(res.get_header_value("Retry-After"));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(const ProviderSpec& spec) : spec_(spec) {
        const char* key = std::getenv(spec.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw AuthError("environment variable " + spec.api_key_env +
                            " is not set (required for provider " + provider_kind_name(spec.kind) +
                            ")");
        }
        api_key_ = key;
        url_ = split_url(spec.endpoint);
    }

    Completion complete(const Conversation& conv) override {
        httplib::Client client(url_.base);
        client.set_connection_timeout(30, 0);
        client.set_read_timeout(300, 0);
        client.set_write_timeout(30, 0);

        json body;
        httplib::Headers headers;
        if (spec_.kind == ProviderKind::openai_compatible) {
            build_openai(conv, body);
            headers.emplace("Authorization", "Bearer " + api_key_);
        } else {
            build_anthropic(conv, body);
            headers.emplace("x-api-key", api_key_);
            headers.emplace("anthropic-version", "2023-06-01");
        }

        auto res = client.Post(url_.path, headers, body.dump(), "application/json");
        if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
        if (res->status == 401 || res->status == 403) {
            throw AuthError("provider rejected the API key (HTTP " +
                            std::to_string(res->status) + ")");
        }
        if (res->status == 429) throw RateLimited(parse_retry_after(*res));
        if (res->status < 200 || res->status >= 300) {
            throw TransportError("HTTP " + std::to_string(res->status) + ": " +
                                 res->body.substr(0, 512));
        }
        return spec_.kind == ProviderKind::openai_compatible ? parse_openai(res->body)
                                                             : parse_anthropic(res->body);
    }

private:
    void build_openai(const Conversation& conv, json& body) const {
        body["model"] = spec_.model;
        body["temperature"] = spec_.temperature;
        body["max_tokens"] = spec_.max_tokens;
        json messages = json::array();
        for (const auto& m : conv.messages()) {
            messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
        }
        body["messages"] = std::move(messages);
    }

    void build_anthropic(const Conversation& conv, json& body) const {
        body["model"] = spec_.model;
        body["temperature"] = spec_.temperature;
        body["max_tokens"] = spec_.max_tokens;
        json messages = json::array();
        for (const auto& m : conv.messages()) {
            if (m.role == Role::system) {
                body["system"] = m.content;
                continue;
            }
            messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
        }
        body["messages"] = std::move(messages);
    }

    Completion parse_openai(const std::string& body) const {
        json j = parse_body(body);
        try {
            const json& choice = j.at("choices").at(0);
            std::string content = choice.at("message").at("content").get<std::string>();
            if (content.empty()) throw MalformedResponse("assistant content is empty");
            Completion c;
            c.message = {Role::assistant, std::move(content)};
            if (j.contains("usage")) {
                c.usage.input_tokens = j["usage"].value("prompt_tokens", 0LL);
                c.usage.output_tokens = j["usage"].value("completion_tokens", 0LL);
            }
            return c;
        } catch (const json::exception& e) {
            throw MalformedResponse(std::string("response shape: ") + e.what());
        }
    }

    Completion parse_anthropic(const std::string& body) const {
        json j = parse_body(body);
        try {
            std::string content;
            for (const auto& part : j.at("content")) {
                if (part.contains("text")) {
                    content = part["text"].get<std::string>();
                    break;
                }
            }
            if (content.empty()) throw MalformedResponse("assistant content is empty");
            Completion c;
            c.message = {Role::assistant, std::move(content)};
            if (j.contains("usage")) {
                c.usage.input_tokens = j["usage"].value("input_tokens", 0LL);
                c.usage.output_tokens = j["usage"].value("output_tokens", 0LL);
            }
            return c;
        } catch (const json::exception& e) {
            throw MalformedResponse(std::string("response shape: ") + e.what());
        }
    }

    static json parse_body(const std::string& body) {
        json j = json::parse(body, nullptr, false);
        if (j.is_discarded()) throw MalformedResponse("response body is not valid JSON");
        return j;
    }

    ProviderSpec spec_;
    std::string api_key_;
    SplitUrl url_;
};

std::unique_ptr<ChatBackend> make_backend(const ProviderSpec& spec) {
    if (spec.kind == ProviderKind::replay) return std::make_unique<ReplayBackend>(spec);
    return std::make_unique<HttpBackend>(spec);
}

void default_sleep(double seconds) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

}  // namespace

Client::Client(const ProviderSpec& spec, Sleeper sleeper)
    : backend_(make_backend(spec)), spec_(spec), sleeper_(sleeper ? std::move(sleeper) : default_sleep) {}

Client::Client(std::unique_ptr<ChatBackend> backend, ProviderSpec spec, Sleeper sleeper)
    : backend_(std::move(backend)),
      spec_(std::move(spec)),
      sleeper_(sleeper ? std::move(sleeper) : default_sleep) {}

Completion Client::complete(const Conversation& conv) {
    if (!conv.ends_with_user()) {
        throw std::logic_error("conversation must end with a user message");
    }
    static constexpr double kBackoffSeconds[] = {1.0, 2.0, 4.0};
    for (int attempt = 0;; ++attempt) {
        try {
            return backend_->complete(conv);
        } catch (const RateLimited&) {
            if (attempt >= 3) throw;
            sleeper_(kBackoffSeconds[attempt]);
        }
    }
}

}  // namespace optloop
