#include "vra/gateway/mock_script.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace vra::gateway {

using nlohmann::json;

namespace {

bool valid_failure(const std::string& f)
{
    if (f == "timeout" || f == "transport" || f == "empty")
        return true;
    if (!f.starts_with("status:"))
        return false;
    auto const code = f.substr(7);
    return !code.empty() && code.size() <= 3 && code.find_first_not_of("0123456789") == std::string::npos;
}

}  // namespace

MockScript MockScript::parse(std::string_view json_text, std::string fallback_id)
{
    json doc;
    try
    {
        doc = json::parse(json_text);
    }
    catch (const json::exception& e)
    {
        throw ScriptParseError(fmt::format("mock script is not valid JSON: {}", e.what()));
    }
    if (!doc.is_object())
        throw ScriptParseError("mock script must be a JSON object");

    MockScript script;
    try
    {
        script.backend_id_ = doc.value("backend_id", fallback_id);
        script.delay_ = std::chrono::milliseconds(doc.value("delay_ms", 0));
        if (doc.contains("default"))
            script.default_reply_ = doc.at("default").get<std::string>();

        auto const& rules = doc.contains("rules") ? doc.at("rules") : json::array();
        if (!rules.is_array())
            throw ScriptParseError("\"rules\" must be an array");

        for (std::size_t i = 0; i < rules.size(); ++i)
        {
            auto const& r = rules[i];
            Rule rule{};
            try
            {
                rule.role = role_from_string(r.at("role").get<std::string>());
            }
            catch (const std::invalid_argument& e)
            {
                throw ScriptParseError(fmt::format("rule {}: {}", i, e.what()));
            }
            if (r.contains("ordinal"))
                rule.ordinal = r.at("ordinal").get<int>();
            if (r.contains("question"))
                rule.question = r.at("question").get<std::string>();
            if (r.contains("reply"))
                rule.reply = r.at("reply").get<std::string>();
            if (r.contains("fail"))
                rule.failure = r.at("fail").get<std::string>();
            if (r.contains("delay_ms"))
                rule.delay = std::chrono::milliseconds(r.at("delay_ms").get<int>());

            if (rule.reply.has_value() == rule.failure.has_value())
                throw ScriptParseError(fmt::format("rule {}: needs exactly one of \"reply\" or \"fail\"", i));
            if (rule.failure && !valid_failure(*rule.failure))
                throw ScriptParseError(fmt::format("rule {}: unknown failure '{}'", i, *rule.failure));
            script.rules_.push_back(std::move(rule));
        }
    }
    catch (const json::exception& e)
    {
        throw ScriptParseError(fmt::format("mock script field has the wrong type: {}", e.what()));
    }

    if (!script.default_reply_)
    {
        std::set<Role> mentioned, covered;
        for (auto const& rule : script.rules_)
        {
            mentioned.insert(rule.role);
            if (!rule.ordinal && !rule.question)
                covered.insert(rule.role);
        }
        for (auto const role : mentioned)
            if (!covered.contains(role))
                throw ScriptParseError(
                    fmt::format("script has keyed {} rules but no fallback for other calls", to_string(role)));
    }
    return script;
}

MockScript MockScript::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ScriptParseError(fmt::format("cannot open mock script '{}'", path.string()));
    std::stringstream content;
    content << in.rdbuf();
    try
    {
        return parse(content.str(), path.stem().string());
    }
    catch (const ScriptParseError& e)
    {
        throw ScriptParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

MockScript::Outcome MockScript::lookup(const CallContext& ctx) const
{
    const Rule* best = nullptr;
    int best_score = -1;
    for (auto const& rule : rules_)
    {
        if (rule.role != ctx.role)
            continue;
        if (rule.ordinal && *rule.ordinal != ctx.ordinal)
            continue;
        if (rule.question && *rule.question != ctx.question)
            continue;
        auto const score = (rule.question ? 2 : 0) + (rule.ordinal ? 1 : 0);
        if (score > best_score)
        {
            best = &rule;
            best_score = score;
        }
    }

    if (!best)
    {
        if (!default_reply_)
            throw ScriptParseError(fmt::format("mock '{}' has no reply for {} call #{}", backend_id_,
                                               to_string(ctx.role), ctx.ordinal));
        return Outcome{default_reply_, std::nullopt, delay_};
    }
    return Outcome{best->reply, best->failure, best->delay.value_or(delay_)};
}

BackendConfig mock_from_script(const std::filesystem::path& path)
{
    auto script = std::make_shared<const MockScript>(MockScript::load(path));
    BackendConfig config;
    config.backend_id = script->backend_id();
    config.kind = BackendKind::mock;
    config.script_path = path;
    config.script = std::move(script);
    return config;
}

}  // namespace vra::gateway
