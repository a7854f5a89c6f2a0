#pragma once

#include "vra/gateway/types.hpp"
#include "vra/prompts/registry.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <memory>
#include <semaphore>
#include <span>
#include <string_view>
#include <vector>

namespace vra::gateway {

struct GatewayOptions {
    // Upper bound on backend calls in flight across all tasks.
    int max_in_flight = 16;
    // Called before every backend call, possibly from several threads at once.
    std::function<void(const BackendConfig&, std::span<const ChatMessage>, const CallContext&)> on_call;
};

// OpenAI-compatible chat-completions wire format.
namespace wire {

// {"model", "messages", "temperature", "max_tokens"} plus "tools" when given.
nlohmann::json build_request(const BackendConfig& config, std::span<const ChatMessage> messages, double temperature,
                             const nlohmann::json* tools);

struct ParsedReply {
    std::string text;
    bool truncated = false;
    std::optional<std::string> tool_question;
};

// Reads the first choice. Throws EmptyCompletion when it carries neither
// content nor a tool call, TransportError on a malformed body.
ParsedReply parse_response(const nlohmann::json& body);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::string data_url(const ImageRef::Bytes& bytes, MediaType type);

}  // namespace wire

// Uniform entry point to text, vision and mock backends. Safe for
// concurrent use; calls share nothing but the in-flight limit.
class Gateway {
public:
    explicit Gateway(std::shared_ptr<const prompts::PromptRegistry> registry, GatewayOptions options = {});

    // Plain chat call. Requires kind chat_text or mock and a non-empty
    // message list. Transport failures and 5xx replies are retried up to
    // config.max_retries times with exponential backoff.
    ModelReply chat(const BackendConfig& config, std::span<const ChatMessage> messages,
                    const CallContext& ctx = {}) const;

    // Chat call that also offers the model a one-argument tool
    // ("query_vision_models", parameter "question").
    ModelReply chat_with_question_tool(const BackendConfig& config, std::span<const ChatMessage> messages,
                                       const CallContext& ctx = {}) const;

    // One user message with the image attached at the prompt's image slot.
    // Requires kind chat_vision or mock. The image is checked before any
    // network traffic.
    ModelReply image_query(const BackendConfig& config, const ImageRef& image, const prompts::PromptPair& prompt,
                           const CallContext& ctx = {}) const;

    // image_query with the vision-suite template bound to the question.
    ModelReply vision_query(const BackendConfig& config, const ImageRef& image, std::string_view question,
                            const CallContext& ctx = {}) const;

    // Asks every suite backend the same question concurrently. Results keep
    // suite order; a failing backend leaves a FailureRecord in its slot.
    // Throws AllBackendsFailed only when every slot failed.
    std::vector<VisualEvidence> fan_out(std::span<const BackendConfig> suite, const ImageRef& image,
                                        std::string_view question, const CallContext& ctx = {}) const;

    const prompts::PromptRegistry& registry() const { return *registry_; }

private:
    ModelReply dispatch(const BackendConfig& config, std::span<const ChatMessage> messages, const CallContext& ctx,
                        const nlohmann::json* tools) const;
    ModelReply query_loaded(const BackendConfig& config, const ImageRef& image, std::string_view question,
                            const CallContext& ctx) const;

    std::shared_ptr<const prompts::PromptRegistry> registry_;
    GatewayOptions options_;
    std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

}  // namespace vra::gateway
