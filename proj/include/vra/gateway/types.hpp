#pragma once

#include "vra/core/errors.hpp"
#include "vra/core/types.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vra::gateway {

class MockScript;

enum class BackendKind { chat_text, chat_vision, mock };

std::string_view to_string(BackendKind kind);
std::optional<BackendKind> backend_kind_from_string(std::string_view name);

struct BackendConfig {
    std::string backend_id;
    BackendKind kind = BackendKind::chat_text;
    std::string endpoint_url;
    std::string model_name;
    double timeout_s = 120.0;
    int max_retries = 2;
    // Name of the environment variable holding the bearer token; empty for none.
    std::string auth_token_env;
    // Unset means the role default: 0.0 for the judge, 0.2 elsewhere.
    std::optional<double> temperature;
    int max_tokens = 2048;
    // First backoff delay; doubles on each retry.
    double retry_backoff_s = 0.5;

    // Mock backends only.
    std::filesystem::path script_path;
    std::shared_ptr<const MockScript> script;
};

// Throws std::invalid_argument on a broken invariant.
void validate(const BackendConfig& config);

double effective_temperature(const BackendConfig& config, Role role);

enum class MessageRole { system, user, assistant };

std::string_view to_string(MessageRole role);

struct ChatMessage {
    MessageRole role = MessageRole::user;
    std::string text;
    // User messages only. The image is attached at byte offset image_slot of text.
    std::optional<ImageRef> image;
    std::size_t image_slot = 0;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// Throws std::invalid_argument when an image sits on a non-user message
// or a message is empty.
void validate(const ChatMessage& message);

// Who is calling and why. Mock backends key their replies on it; real
// backends ignore it.
struct CallContext {
    Role role = Role::captioner;
    int ordinal = 0;
    std::string question;
};

struct ModelReply {
    std::string text;
    double latency_s = 0.0;
    std::string backend_id;
    bool truncated = false;
    int attempts = 1;
    // Question argument of a tool call, when the model answered with one.
    std::optional<std::string> tool_question;

    friend bool operator==(const ModelReply&, const ModelReply&) = default;
};

struct FailureRecord {
    std::string backend_id;
    std::string error_kind;
    std::string message;
    double latency_s = 0.0;

    friend bool operator==(const FailureRecord&, const FailureRecord&) = default;
};

struct VisualEvidence {
    std::string backend_id;
    std::string question;
    std::variant<ModelReply, FailureRecord> reply;

    bool ok() const { return std::holds_alternative<ModelReply>(reply); }
    double latency_s() const;
    // Reply text, or "[backend <id> unavailable]" for a failed slot.
    std::string text() const;

    friend bool operator==(const VisualEvidence&, const VisualEvidence&) = default;
};

class GatewayError : public Error {
public:
    GatewayError(std::string kind, const std::string& message) : Error(message), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

class Timeout : public GatewayError {
public:
    explicit Timeout(const std::string& message) : GatewayError("timeout", message) {}
};

class TransportError : public GatewayError {
public:
    explicit TransportError(const std::string& message) : GatewayError("transport", message) {}
};

class BadStatus : public GatewayError {
public:
    BadStatus(int status, const std::string& message) : GatewayError("bad_status", message), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

class EmptyCompletion : public GatewayError {
public:
    explicit EmptyCompletion(const std::string& message) : GatewayError("empty_completion", message) {}
};

class ScriptParseError : public GatewayError {
public:
    explicit ScriptParseError(const std::string& message) : GatewayError("script", message) {}
};

class AllBackendsFailed : public GatewayError {
public:
    AllBackendsFailed(std::vector<VisualEvidence> evidence, const std::string& message)
        : GatewayError("all_backends_failed", message), evidence_(std::move(evidence))
    {
    }
    const std::vector<VisualEvidence>& evidence() const { return evidence_; }

private:
    std::vector<VisualEvidence> evidence_;
};

}  // namespace vra::gateway
