#include "vra/cli/app.hpp"

#include "vra/gateway/mock_script.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <set>

namespace vra::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Field access that names the offending key path in every error.
class Fields {
public:
    Fields(const json& obj, std::string where, std::set<std::string> allowed) : obj_(obj), where_(std::move(where))
    {
        if (!obj_.is_object())
            throw ConfigError(fmt::format("{}: expected an object", where_));
        for (auto const& [key, _] : obj_.items())
            if (!allowed.contains(key))
                throw ConfigError(fmt::format("{}: unknown key \"{}\"", where_, key));
    }

    bool has(const char* key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

    const json& at(const char* key) const
    {
        if (!has(key))
            throw ConfigError(fmt::format("{}: missing key \"{}\"", where_, key));
        return obj_.at(key);
    }

    std::string path(const char* key) const { return fmt::format("{}.{}", where_, key); }

    std::string text(const char* key) const
    {
        auto const& v = at(key);
        if (!v.is_string())
            throw ConfigError(fmt::format("{}: expected a string", path(key)));
        return v.get<std::string>();
    }

    std::string text_or(const char* key, std::string fallback) const { return has(key) ? text(key) : fallback; }

    template <typename T>
    T number_or(const char* key, T fallback) const
    {
        if (!has(key))
            return fallback;
        auto const& v = at(key);
        if constexpr (std::is_integral_v<T>)
        {
            if (!v.is_number_integer())
                throw ConfigError(fmt::format("{}: expected an integer", path(key)));
        }
        else if (!v.is_number())
            throw ConfigError(fmt::format("{}: expected a number", path(key)));
        return v.get<T>();
    }

private:
    const json& obj_;
    std::string where_;
};

fs::path resolve(const fs::path& base, const std::string& p)
{
    fs::path path(p);
    return path.is_relative() ? (base / path).lexically_normal() : path;
}

gateway::BackendConfig parse_backend(const json& j, const std::string& where, const fs::path& base)
{
    Fields f(j, where,
             {"id", "kind", "endpoint_url", "model_name", "timeout_s", "max_retries", "auth_token_env", "temperature",
              "max_tokens", "retry_backoff_s", "script"});
    gateway::BackendConfig b;
    b.backend_id = f.text("id");
    auto const kind = gateway::backend_kind_from_string(f.text("kind"));
    if (!kind)
        throw ConfigError(fmt::format("{}: kind must be chat_text, chat_vision or mock", f.path("kind")));
    b.kind = *kind;
    b.endpoint_url = f.text_or("endpoint_url", "");
    b.model_name = f.text_or("model_name", "");
    b.timeout_s = f.number_or("timeout_s", b.timeout_s);
    b.max_retries = f.number_or("max_retries", b.max_retries);
    b.auth_token_env = f.text_or("auth_token_env", "");
    if (f.has("temperature"))
        b.temperature = f.number_or("temperature", 0.0);
    b.max_tokens = f.number_or("max_tokens", b.max_tokens);
    b.retry_backoff_s = f.number_or("retry_backoff_s", b.retry_backoff_s);
    if (b.kind == gateway::BackendKind::mock)
    {
        b.script_path = resolve(base, f.text("script"));
        try
        {
            b.script = std::make_shared<const gateway::MockScript>(gateway::MockScript::load(b.script_path));
        }
        catch (const gateway::ScriptParseError& e)
        {
            throw ConfigError(fmt::format("{}: {}", f.path("script"), e.what()));
        }
    }
    else if (f.has("script"))
        throw ConfigError(fmt::format("{}: only mock backends take a script", f.path("script")));

    try
    {
        gateway::validate(b);
    }
    catch (const std::invalid_argument& e)
    {
        throw ConfigError(fmt::format("{}: {}", where, e.what()));
    }
    return b;
}

orchestrator::PipelineConfig parse_pipeline(const json& j, const fs::path& base)
{
    Fields f(j, "pipeline", {"backbone", "captioner", "suite", "judge", "iterations", "context", "inquirer"});
    orchestrator::PipelineConfig p;
    p.backbone = parse_backend(f.at("backbone"), "pipeline.backbone", base);
    p.captioner = parse_backend(f.at("captioner"), "pipeline.captioner", base);
    auto const& suite = f.at("suite");
    if (!suite.is_array())
        throw ConfigError("pipeline.suite: expected an array");
    for (std::size_t i = 0; i < suite.size(); ++i)
        p.suite.push_back(parse_backend(suite[i], fmt::format("pipeline.suite[{}]", i), base));
    if (f.has("judge"))
        p.judge = parse_backend(f.at("judge"), "pipeline.judge", base);
    p.iterations = f.number_or("iterations", p.iterations);
    if (f.has("context"))
    {
        auto const c = orchestrator::context_policy_from_string(f.text("context"));
        if (!c)
            throw ConfigError("pipeline.context: expected full_transcript or last_round");
        p.context = *c;
    }
    if (f.has("inquirer"))
    {
        auto const m = orchestrator::inquirer_mode_from_string(f.text("inquirer"));
        if (!m)
            throw ConfigError("pipeline.inquirer: expected extract or model");
        p.inquirer = *m;
    }
    try
    {
        orchestrator::validate(p);
    }
    catch (const std::invalid_argument& e)
    {
        throw ConfigError(fmt::format("pipeline: {}", e.what()));
    }
    return p;
}

}  // namespace

AppConfig load_config(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
    json j;
    try
    {
        j = json::parse(in);
    }
    catch (const json::exception& e)
    {
        throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
    }

    auto const base = fs::absolute(path).parent_path();
    Fields f(j, "config",
             {"pipeline", "dataset_path", "sample_n", "seed", "output_dir", "concurrency_limit", "max_in_flight",
              "template_dir", "clock"});
    AppConfig c;
    c.pipeline = parse_pipeline(f.at("pipeline"), base);
    if (f.has("dataset_path"))
        c.dataset_path = resolve(base, f.text("dataset_path"));
    c.sample_n = f.number_or("sample_n", c.sample_n);
    c.seed = f.number_or<std::uint64_t>("seed", c.seed);
    c.output_dir = resolve(base, f.text_or("output_dir", "out"));
    c.concurrency_limit = f.number_or("concurrency_limit", c.concurrency_limit);
    c.max_in_flight = f.number_or("max_in_flight", c.max_in_flight);
    c.template_dir = f.has("template_dir") ? resolve(base, f.text("template_dir"))
                                           : prompts::PromptRegistry::default_directory();
    if (f.has("clock"))
    {
        Fields cf(f.at("clock"), "config.clock", {"start", "step_ms"});
        StepClockConfig sc;
        try
        {
            sc.start = parse_iso8601(cf.text("start"));
        }
        catch (const ConfigError&)
        {
            throw;
        }
        catch (const Error& e)
        {
            throw ConfigError(fmt::format("config.clock.start: {}", e.what()));
        }
        sc.step = std::chrono::milliseconds(cf.number_or<long long>("step_ms", 1000));
        if (sc.step.count() <= 0)
            throw ConfigError("config.clock.step_ms must be positive");
        c.clock = sc;
    }

    if (c.sample_n < 1)
        throw ConfigError("config.sample_n must be at least 1");
    if (c.concurrency_limit < 1)
        throw ConfigError("config.concurrency_limit must be at least 1");
    if (c.max_in_flight < 1)
        throw ConfigError("config.max_in_flight must be at least 1");
    return c;
}

void validate_environment(const AppConfig& config)
{
    std::vector<const gateway::BackendConfig*> backends{&config.pipeline.backbone, &config.pipeline.captioner};
    for (auto const& b : config.pipeline.suite)
        backends.push_back(&b);
    if (config.pipeline.judge)
        backends.push_back(&*config.pipeline.judge);
    for (auto const* b : backends)
    {
        if (b->auth_token_env.empty())
            continue;
        auto const* value = std::getenv(b->auth_token_env.c_str());
        if (value == nullptr || *value == '\0')
            throw ConfigError(
                fmt::format("backend '{}': environment variable {} is not set", b->backend_id, b->auth_token_env));
    }

    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec)
        throw ConfigError(fmt::format("output_dir '{}': {}", config.output_dir.string(), ec.message()));
    auto const probe = config.output_dir / ".write_probe";
    {
        std::ofstream out(probe, std::ios::binary | std::ios::trunc);
        if (!out || !(out << "ok") || !out.flush())
            throw ConfigError(fmt::format("output_dir '{}' is not writable", config.output_dir.string()));
    }
    fs::remove(probe, ec);
}

}  // namespace vra::cli
