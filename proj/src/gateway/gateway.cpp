#include "vra/gateway/gateway.hpp"

#include "http_client.hpp"
#include "vra/gateway/mock_script.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <future>
#include <stdexcept>
#include <thread>

namespace vra::gateway {

using nlohmann::json;

namespace wire {

std::string base64_encode(std::span<const std::uint8_t> bytes)
{
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    auto const n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                   static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string data_url(const ImageRef::Bytes& bytes, MediaType type)
{
    return fmt::format("data:{};base64,{}", mime_type(type), base64_encode(bytes));
}

namespace {

json message_content(const ChatMessage& m)
{
    if (!m.image)
        return m.text;
    auto const slot = std::min(m.image_slot, m.text.size());
    json parts = json::array();
    if (slot > 0)
        parts.push_back({{"type", "text"}, {"text", m.text.substr(0, slot)}});
    parts.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", data_url(m.image->load(), m.image->media_type())}}}});
    if (slot < m.text.size())
        parts.push_back({{"type", "text"}, {"text", m.text.substr(slot)}});
    return parts;
}

}  // namespace

json build_request(const BackendConfig& config, std::span<const ChatMessage> messages, double temperature,
                   const json* tools)
{
    json msgs = json::array();
    for (auto const& m : messages)
        msgs.push_back({{"role", to_string(m.role)}, {"content", message_content(m)}});
    json req{
        {"model", config.model_name},
        {"messages", std::move(msgs)},
        {"temperature", temperature},
        {"max_tokens", config.max_tokens},
    };
    if (tools)
        req["tools"] = *tools;
    return req;
}

ParsedReply parse_response(const json& body)
{
    ParsedReply out;
    try
    {
        auto const& choices = body.at("choices");
        if (!choices.is_array() || choices.empty())
            throw EmptyCompletion("response has no choices");
        auto const& choice = choices.at(0);
        auto const& message = choice.at("message");

        if (auto it = message.find("content"); it != message.end())
        {
            if (it->is_string())
                out.text = it->get<std::string>();
            else if (it->is_array())
                for (auto const& part : *it)
                    if (part.value("type", "") == "text")
                        out.text += part.value("text", "");
        }
        if (auto it = message.find("tool_calls"); it != message.end() && it->is_array() && !it->empty())
        {
            auto const& args = (*it)[0].at("function").at("arguments");
            auto const parsed = args.is_string() ? json::parse(args.get<std::string>()) : args;
            if (auto q = parsed.find("question"); q != parsed.end() && q->is_string())
                out.tool_question = q->get<std::string>();
        }
        if (auto it = choice.find("finish_reason"); it != choice.end() && it->is_string())
            out.truncated = it->get<std::string>() == "length";
    }
    catch (const json::exception& e)
    {
        throw TransportError(fmt::format("malformed completion body: {}", e.what()));
    }
    if (out.text.empty() && !out.tool_question)
        throw EmptyCompletion("completion carries no content");
    return out;
}

}  // namespace wire

namespace {

const json& question_tool()
{
    static const json tools = json::array({{
        {"type", "function"},
        {"function",
         {{"name", "query_vision_models"},
          {"description", "Ask the vision models one question about the image."},
          {"parameters",
           {{"type", "object"},
            {"properties", {{"question", {{"type", "string"}}}}},
            {"required", json::array({"question"})}}}}},
    }});
    return tools;
}

double elapsed_s(std::chrono::steady_clock::time_point since)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

[[noreturn]] void throw_scripted(const std::string& failure, const std::string& backend_id)
{
    if (failure == "timeout")
        throw Timeout(fmt::format("mock '{}' scripted a timeout", backend_id));
    if (failure == "transport")
        throw TransportError(fmt::format("mock '{}' scripted a transport error", backend_id));
    if (failure == "empty")
        throw EmptyCompletion(fmt::format("mock '{}' scripted an empty completion", backend_id));
    auto const status = std::stoi(failure.substr(failure.find(':') + 1));
    throw BadStatus(status, fmt::format("mock '{}' scripted status {}", backend_id, status));
}

ModelReply call_mock(const BackendConfig& config, const CallContext& ctx)
{
    auto script = config.script;
    if (!script)
        script = std::make_shared<const MockScript>(MockScript::load(config.script_path));

    auto const start = std::chrono::steady_clock::now();
    auto const outcome = script->lookup(ctx);
    if (outcome.delay.count() > 0)
        std::this_thread::sleep_for(outcome.delay);
    if (outcome.failure)
        throw_scripted(*outcome.failure, config.backend_id);

    ModelReply reply;
    reply.text = *outcome.reply;
    reply.latency_s = elapsed_s(start);
    reply.backend_id = config.backend_id;
    return reply;
}

std::string bearer_token(const BackendConfig& config)
{
    if (config.auth_token_env.empty())
        return {};
    const char* value = std::getenv(config.auth_token_env.c_str());
    if (!value || !*value)
        throw GatewayError("auth", fmt::format("backend '{}': environment variable {} is not set",
                                               config.backend_id, config.auth_token_env));
    return value;
}

ModelReply call_http(const BackendConfig& config, std::span<const ChatMessage> messages, const CallContext& ctx,
                     const json* tools)
{
    auto const token = bearer_token(config);
    auto const request =
        wire::build_request(config, messages, effective_temperature(config, ctx.role), tools).dump();

    double network_s = 0.0;
    for (int attempt = 1;; ++attempt)
    {
        auto const start = std::chrono::steady_clock::now();
        std::string transient;
        std::optional<detail::HttpResult> res;
        try
        {
            res = detail::post_json(config.endpoint_url, request, token, config.timeout_s);
        }
        catch (const GatewayError& e)
        {
            if (attempt > config.max_retries)
                throw;
            transient = e.what();
        }
        network_s += elapsed_s(start);

        if (res && res->status >= 200 && res->status < 300)
        {
            json body;
            try
            {
                body = json::parse(res->body);
            }
            catch (const json::exception& e)
            {
                throw TransportError(fmt::format("{}: reply is not JSON: {}", config.backend_id, e.what()));
            }
            auto parsed = wire::parse_response(body);
            ModelReply reply;
            reply.text = std::move(parsed.text);
            reply.truncated = parsed.truncated;
            reply.tool_question = std::move(parsed.tool_question);
            reply.latency_s = network_s;
            reply.backend_id = config.backend_id;
            reply.attempts = attempt;
            return reply;
        }
        if (res)
        {
            if (res->status < 500 || attempt > config.max_retries)
                throw BadStatus(res->status, fmt::format("{} answered HTTP {}", config.backend_id, res->status));
            transient = fmt::format("HTTP {}", res->status);
        }

        auto const backoff = config.retry_backoff_s * std::pow(2.0, attempt - 1);
        spdlog::warn("{}: attempt {} failed ({}), retrying in {:.2f} s", config.backend_id, attempt, transient,
                     backoff);
        std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
    }
}

}  // namespace

Gateway::Gateway(std::shared_ptr<const prompts::PromptRegistry> registry, GatewayOptions options)
    : registry_(std::move(registry)), options_(std::move(options))
{
    if (!registry_)
        throw std::invalid_argument("gateway needs a prompt registry");
    if (options_.max_in_flight < 1)
        throw std::invalid_argument("max_in_flight must be at least 1");
    in_flight_ = std::make_unique<std::counting_semaphore<>>(options_.max_in_flight);
}

ModelReply Gateway::dispatch(const BackendConfig& config, std::span<const ChatMessage> messages,
                             const CallContext& ctx, const json* tools) const
{
    validate(config);
    if (messages.empty())
        throw std::invalid_argument("chat needs at least one message");
    for (auto const& m : messages)
        validate(m);

    if (options_.on_call)
        options_.on_call(config, messages, ctx);

    in_flight_->acquire();
    struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
    } release{*in_flight_};

    if (config.kind == BackendKind::mock)
        return call_mock(config, ctx);
    return call_http(config, messages, ctx, tools);
}

ModelReply Gateway::chat(const BackendConfig& config, std::span<const ChatMessage> messages,
                         const CallContext& ctx) const
{
    if (config.kind == BackendKind::chat_vision)
        throw std::invalid_argument(fmt::format("chat called on vision backend '{}'", config.backend_id));
    return dispatch(config, messages, ctx, nullptr);
}

ModelReply Gateway::chat_with_question_tool(const BackendConfig& config, std::span<const ChatMessage> messages,
                                            const CallContext& ctx) const
{
    if (config.kind == BackendKind::chat_vision)
        throw std::invalid_argument(fmt::format("chat called on vision backend '{}'", config.backend_id));
    return dispatch(config, messages, ctx, &question_tool());
}

ModelReply Gateway::image_query(const BackendConfig& config, const ImageRef& image,
                                const prompts::PromptPair& prompt, const CallContext& ctx) const
{
    if (config.kind == BackendKind::chat_text)
        throw std::invalid_argument(
            fmt::format("image sent to text-only backend '{}'", config.backend_id));

    // Decode up front so a bad image never costs a network round trip.
    auto const loaded = image.is_file() ? ImageRef::from_bytes(image.load(), image.media_type()) : image;
    if (!image.is_file())
        (void)image.load();

    std::vector<ChatMessage> messages;
    if (prompt.system_text)
        messages.push_back({MessageRole::system, *prompt.system_text, std::nullopt, 0});
    messages.push_back({MessageRole::user, prompt.user_text, loaded, prompt.image_slot.value_or(0)});
    return dispatch(config, messages, ctx, nullptr);
}

ModelReply Gateway::vision_query(const BackendConfig& config, const ImageRef& image, std::string_view question,
                                 const CallContext& ctx) const
{
    if (question.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw std::invalid_argument("vision query with an empty question");
    return query_loaded(config, image, question, ctx);
}

ModelReply Gateway::query_loaded(const BackendConfig& config, const ImageRef& image, std::string_view question,
                                 const CallContext& ctx) const
{
    auto const prompt = registry_->render(prompts::TemplateId::vision_user,
                                          {{"image", ""}, {"inquirer_question", std::string(question)}});
    CallContext keyed = ctx;
    keyed.role = Role::vision_suite;
    keyed.question = std::string(question);
    return image_query(config, image, prompt, keyed);
}

std::vector<VisualEvidence> Gateway::fan_out(std::span<const BackendConfig> suite, const ImageRef& image,
                                             std::string_view question, const CallContext& ctx) const
{
    if (suite.empty())
        throw std::invalid_argument("fan-out over an empty suite");
    if (question.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw std::invalid_argument("vision query with an empty question");

    auto const shared = ImageRef::from_bytes(image.load(), image.media_type());
    auto const q = std::string(question);

    std::vector<std::future<VisualEvidence>> pending;
    pending.reserve(suite.size());
    for (auto const& backend : suite)
    {
        pending.push_back(std::async(std::launch::async, [this, &backend, &shared, &q, ctx] {
            VisualEvidence ev{backend.backend_id, q, FailureRecord{}};
            auto const start = std::chrono::steady_clock::now();
            try
            {
                ev.reply = query_loaded(backend, shared, q, ctx);
            }
            catch (const ScriptParseError&)
            {
                throw;
            }
            catch (const GatewayError& e)
            {
                ev.reply = FailureRecord{backend.backend_id, e.kind(), e.what(), elapsed_s(start)};
            }
            return ev;
        }));
    }

    std::vector<VisualEvidence> out;
    out.reserve(suite.size());
    std::exception_ptr first_error;
    for (auto& f : pending)
    {
        try
        {
            out.push_back(f.get());
        }
        catch (...)
        {
            if (!first_error)
                first_error = std::current_exception();
        }
    }
    if (first_error)
        std::rethrow_exception(first_error);

    if (std::none_of(out.begin(), out.end(), [](auto const& ev) { return ev.ok(); }))
        throw AllBackendsFailed(std::move(out), fmt::format("all {} suite backends failed", suite.size()));
    return out;
}

}  // namespace vra::gateway
