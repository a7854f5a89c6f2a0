#include "vra/gateway/types.hpp"

#include "vra/gateway/mock_script.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace vra::gateway {

std::string_view to_string(BackendKind kind)
{
    switch (kind)
    {
    case BackendKind::chat_text: return "chat_text";
    case BackendKind::chat_vision: return "chat_vision";
    case BackendKind::mock: return "mock";
    }
    return "unknown";
}

std::optional<BackendKind> backend_kind_from_string(std::string_view name)
{
    for (auto kind : {BackendKind::chat_text, BackendKind::chat_vision, BackendKind::mock})
        if (to_string(kind) == name)
            return kind;
    return std::nullopt;
}

void validate(const BackendConfig& config)
{
    if (config.backend_id.empty())
        throw std::invalid_argument("backend_id is empty");
    if (!(config.timeout_s > 0.0))
        throw std::invalid_argument(fmt::format("backend '{}': timeout_s must be positive", config.backend_id));
    if (config.max_retries < 0)
        throw std::invalid_argument(fmt::format("backend '{}': max_retries is negative", config.backend_id));
    if (config.retry_backoff_s < 0.0)
        throw std::invalid_argument(fmt::format("backend '{}': retry_backoff_s is negative", config.backend_id));
    if (config.max_tokens <= 0)
        throw std::invalid_argument(fmt::format("backend '{}': max_tokens must be positive", config.backend_id));

    if (config.kind == BackendKind::mock)
    {
        if (!config.script && config.script_path.empty())
            throw std::invalid_argument(fmt::format("mock backend '{}' has no script", config.backend_id));
        if (!config.endpoint_url.empty())
            throw std::invalid_argument(
                fmt::format("mock backend '{}' takes a script, not an endpoint_url", config.backend_id));
    }
    else if (config.endpoint_url.empty())
        throw std::invalid_argument(fmt::format("backend '{}' has no endpoint_url", config.backend_id));
}

double effective_temperature(const BackendConfig& config, Role role)
{
    if (config.temperature)
        return *config.temperature;
    return role == Role::judge ? 0.0 : 0.2;
}

std::string_view to_string(MessageRole role)
{
    switch (role)
    {
    case MessageRole::system: return "system";
    case MessageRole::user: return "user";
    case MessageRole::assistant: return "assistant";
    }
    return "unknown";
}

void validate(const ChatMessage& message)
{
    if (message.image && message.role != MessageRole::user)
        throw std::invalid_argument(fmt::format("image attached to a {} message", to_string(message.role)));
    if (message.text.empty() && !message.image)
        throw std::invalid_argument("message has neither text nor image");
    if (message.image_slot > message.text.size())
        throw std::invalid_argument("image_slot lies past the end of the text");
}

double VisualEvidence::latency_s() const
{
    return std::visit([](auto const& r) { return r.latency_s; }, reply);
}

std::string VisualEvidence::text() const
{
    if (auto const* r = std::get_if<ModelReply>(&reply))
        return r->text;
    return fmt::format("[backend {} unavailable]", backend_id);
}

}  // namespace vra::gateway
