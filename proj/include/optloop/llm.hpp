#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace optloop {

enum class Role { system, user, assistant };

std::string role_name(Role role);

struct Message {
    Role role = Role::user;
    std::string content;

    bool operator==(const Message&) const = default;
};

// Ordered chat history. Append paths enforce the shape invariants: at most one
// system message, first; then strictly alternating user/assistant.
class Conversation {
public:
    void set_system(std::string content);
    void push_user(std::string content);
    void push_assistant(std::string content);

    const std::vector<Message>& messages() const { return messages_; }
    std::size_t size() const { return messages_.size(); }
    bool ends_with_user() const;

private:
    std::vector<Message> messages_;
};

enum class ProviderKind { openai_compatible, anthropic_compatible, replay };

std::string provider_kind_name(ProviderKind kind);
std::optional<ProviderKind> provider_kind_from(const std::string& name);

struct ProviderSpec {
    ProviderKind kind = ProviderKind::replay;
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    std::string replay_file;
    double temperature = 0.2;
    int max_tokens = 4096;
    double price_per_million_input = 0.0;
    double price_per_million_output = 0.0;

    bool operator==(const ProviderSpec&) const = default;
};

struct Usage {
    long long input_tokens = 0;
    long long output_tokens = 0;

    bool operator==(const Usage&) const = default;
};

double cost_usd(const Usage& usage, const ProviderSpec& spec);

struct AuthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RateLimited : std::runtime_error {
    explicit RateLimited(std::optional<double> retry_after_seconds = std::nullopt)
        : std::runtime_error("provider rate limit exceeded"), retry_after(retry_after_seconds) {}
    std::optional<double> retry_after;
};

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MalformedResponse : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ReplayExhausted : std::runtime_error {
    ReplayExhausted(int consumed)
        : std::runtime_error("replay script exhausted after " + std::to_string(consumed) +
                             " responses"),
          consumed(consumed) {}
    int consumed;
};

struct Completion {
    Message message;  // role is always assistant
    Usage usage;
};

// One concrete transport (HTTP dialect or replay script).
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual Completion complete(const Conversation& conv) = 0;
};

// Splits a replay script on lines containing exactly "---8<---".
std::vector<std::string> split_replay_script(const std::string& text);

// Provider-facing client: validates the conversation shape, retries rate
// limits (1 s, 2 s, 4 s), and never mutates its input. One client serves one
// run's loop at a time.
class Client {
public:
    using Sleeper = std::function<void(double seconds)>;

    explicit Client(const ProviderSpec& spec, Sleeper sleeper = {});

    // Test seam: wrap an arbitrary backend.
    Client(std::unique_ptr<ChatBackend> backend, ProviderSpec spec, Sleeper sleeper = {});

    Completion complete(const Conversation& conv);

    const ProviderSpec& spec() const { return spec_; }

private:
    std::unique_ptr<ChatBackend> backend_;
    ProviderSpec spec_;
    Sleeper sleeper_;
};

}  // namespace optloop
