#include "vra/cli/app.hpp"

#include "vra/core/audit.hpp"
#include "vra/eval/harness.hpp"
#include "vra/eval/runner.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>

namespace vra::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Gateway, pipeline and clock built from one config.
class Engine {
public:
    Engine(const AppConfig& config, const Console& console)
        : gateway_(load_registry(config.template_dir), gateway::GatewayOptions{config.max_in_flight, {}}),
          clock_(pick_clock(config, console)), pipeline_(gateway_, *clock_)
    {
    }

    const gateway::Gateway& gateway() const { return gateway_; }
    const orchestrator::Pipeline& pipeline() const { return pipeline_; }
    const Clock& clock() const { return *clock_; }

private:
    static std::shared_ptr<const prompts::PromptRegistry> load_registry(const fs::path& dir)
    {
        try
        {
            return std::make_shared<const prompts::PromptRegistry>(prompts::PromptRegistry::load(dir));
        }
        catch (const Error& e)
        {
            throw ConfigError(fmt::format("templates in '{}': {}", dir.string(), e.what()));
        }
    }

    const Clock* pick_clock(const AppConfig& config, const Console& console)
    {
        if (console.clock != nullptr)
            return console.clock;
        if (config.clock)
            owned_ = std::make_unique<SteppingClock>(config.clock->start, config.clock->step);
        else
            owned_ = std::make_unique<SystemClock>();
        return owned_.get();
    }

    gateway::Gateway gateway_;
    std::unique_ptr<Clock> owned_;
    const Clock* clock_;
    orchestrator::Pipeline pipeline_;
};

template <typename Body>
int guarded(const Console& console, Body&& body)
{
    try
    {
        return body();
    }
    catch (const ConfigError& e)
    {
        console.err << "config error: " << e.what() << "\n";
        return exit_config;
    }
    catch (const orchestrator::PhaseError& e)
    {
        console.err << "pipeline error: " << e.what() << "\n";
        return exit_pipeline;
    }
    catch (const gateway::GatewayError& e)
    {
        console.err << "pipeline error: " << e.what() << "\n";
        return exit_pipeline;
    }
    catch (const IoError& e)
    {
        console.err << "io error: " << e.what() << "\n";
        return exit_io;
    }
    catch (const ImageDecodeError& e)
    {
        console.err << "io error: " << e.what() << "\n";
        return exit_io;
    }
    catch (const eval::LineError& e)
    {
        console.err << "input error: " << e.what() << "\n";
        return exit_io;
    }
    catch (const eval::EmptyInput& e)
    {
        console.err << "input error: " << e.what() << "\n";
        return exit_io;
    }
    catch (const std::exception& e)
    {
        console.err << "error: " << e.what() << "\n";
        return exit_pipeline;
    }
}

// Record ids come from datasets, so keep only characters safe in a file name.
std::string file_safe(std::string_view id)
{
    std::string out;
    for (char c : id)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    return out.empty() || out.front() == '.' ? "_" + out : out;
}

fs::path audit_path(const fs::path& out_dir, std::string_view task_id, std::string_view suffix = "")
{
    return out_dir / "audit" / fmt::format("{}{}.jsonl", file_safe(task_id), suffix);
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
}

// A failed task still leaves its transcript behind.
void save_failed_audit(const orchestrator::PhaseError& e, const fs::path& out_dir, const Console& console)
{
    if (e.memory().empty())
        return;
    auto const path = audit_path(out_dir, e.memory().task().task_id, ".failed");
    try
    {
        write_audit_file(e.memory(), "", path);
        console.err << "partial audit: " << path.string() << "\n";
    }
    catch (const Error& io)
    {
        console.err << "could not write partial audit: " << io.what() << "\n";
    }
}

// Written to a sibling and renamed, so a kill leaves the old or the new file.
void write_text_file(const fs::path& path, const std::string& text)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out || !(out << text) || !out.flush())
            throw IoError(fmt::format("cannot write '{}'", tmp.string()));
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw IoError(fmt::format("cannot replace '{}': {}", path.string(), ec.message()));
}

std::string read_text_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(fmt::format("cannot read '{}'", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Report generation shared by eval and report, so both give identical
// bytes for identical logs.
eval::RunReport write_reports(const fs::path& verdicts, const fs::path& runtimes, const fs::path& out_dir,
                              const Console& console)
{
    auto const report = eval::aggregate(eval::read_verdicts(verdicts), eval::read_runtimes(runtimes));
    ensure_dir(out_dir);
    for (auto format : {eval::ReportFormat::table_text, eval::ReportFormat::csv, eval::ReportFormat::structured})
        eval::emit_report(report, format, out_dir / (std::string(report_stem) + std::string(eval::extension(format))));
    console.out << eval::render_report(report, eval::ReportFormat::table_text);
    console.out << "reports: " << (out_dir / report_stem).string() << ".{txt,csv,json}\n";
    return report;
}

class AppendLog {
public:
    explicit AppendLog(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::app)
    {
        if (!out_)
            throw IoError(fmt::format("cannot open '{}' for append", path.string()));
    }

    void write_line(const std::string& line)
    {
        out_ << line << '\n';
        out_.flush();
        if (!out_)
            throw IoError(fmt::format("failed writing '{}'", path_.string()));
    }

private:
    fs::path path_;
    std::ofstream out_;
};

json manifest_for(const AppConfig& config, const std::vector<std::string>& types, int per_type,
                  const std::vector<eval::EvalRecord>& selected)
{
    std::vector<std::string> ids;
    for (auto const& r : selected)
        ids.push_back(r.record_id);
    return json{{"dataset", fs::absolute(config.dataset_path).lexically_normal().string()},
                {"seed", config.seed},
                {"per_type", per_type},
                {"types", types},
                {"record_ids", ids}};
}

// Brings the logs of an interrupted run back to a consistent state: torn
// tails are cut, a record counts as done once its verdict is logged, and
// runtimes are kept only for done records. Returns the done ids.
std::set<std::string> recover_logs(const fs::path& verdicts_path, const fs::path& runtimes_path,
                                   const Console& console)
{
    for (auto const& p : {verdicts_path, runtimes_path})
        if (auto const cut = trim_to_last_newline(p); cut > 0)
            console.err << fmt::format("dropped {} bytes of an interrupted write from {}\n", cut, p.string());

    std::set<std::string> done;
    std::string verdict_text;
    for (auto const& v : eval::read_verdicts(verdicts_path))
        if (done.insert(v.record_id).second)
            verdict_text += eval::to_json_line(v) + "\n";

    std::set<std::string> timed;
    std::string runtime_text;
    for (auto const& r : eval::read_runtimes(runtimes_path))
        if (done.contains(r.record_id) && timed.insert(r.record_id).second)
            runtime_text += eval::to_json_line(r) + "\n";

    write_text_file(verdicts_path, verdict_text);
    write_text_file(runtimes_path, runtime_text);
    return done;
}

bool non_empty_file(const fs::path& p)
{
    std::error_code ec;
    return fs::is_regular_file(p, ec) && fs::file_size(p, ec) > 0;
}

}  // namespace

std::uintmax_t trim_to_last_newline(const fs::path& path)
{
    std::error_code ec;
    if (!fs::is_regular_file(path, ec))
        return 0;
    auto const text = read_text_file(path);
    auto const nl = text.rfind('\n');
    auto const keep = nl == std::string::npos ? 0 : nl + 1;
    if (keep == text.size())
        return 0;
    fs::resize_file(path, keep, ec);
    if (ec)
        throw IoError(fmt::format("cannot truncate '{}': {}", path.string(), ec.message()));
    return text.size() - keep;
}

int cmd_ask(const AskOptions& options, const Console& console)
{
    return guarded(console, [&] {
        auto config = load_config(options.config_path);
        if (options.out)
            config.output_dir = *options.out;
        if (options.question.find_first_not_of(" \t\r\n") == std::string::npos)
            throw ConfigError("the question is empty");
        validate_environment(config);

        std::error_code ec;
        if (!fs::is_regular_file(options.image_path, ec))
            throw IoError(fmt::format("image '{}' does not exist", options.image_path.string()));

        Engine engine(config, console);
        auto stamp = format_iso8601(engine.clock().now());
        std::replace(stamp.begin(), stamp.end(), ':', '-');
        VqaTask const task{"ask-" + stamp, ImageRef::from_file(options.image_path), options.question, std::nullopt,
                           std::nullopt};
        try
        {
            auto const result = engine.pipeline().run_task(task, config.pipeline);
            auto const path = audit_path(config.output_dir, task.task_id);
            ensure_dir(path.parent_path());
            write_audit_file(result.memory, result.final_answer, path);
            console.out << result.final_answer << "\n";
            console.out << "audit: " << path.string() << "\n";
            return int(exit_ok);
        }
        catch (const orchestrator::PhaseError& e)
        {
            ensure_dir(config.output_dir / "audit");
            save_failed_audit(e, config.output_dir, console);
            throw;
        }
    });
}

int cmd_eval(const EvalOptions& options, const Console& console)
{
    return guarded(console, [&] {
        auto config = load_config(options.config_path);
        if (options.out)
            config.output_dir = *options.out;
        if (options.seed)
            config.seed = *options.seed;
        if (options.concurrency)
            config.concurrency_limit = *options.concurrency;
        if (config.concurrency_limit < 1)
            throw ConfigError("concurrency must be at least 1");
        if (options.limit && *options.limit < 1)
            throw ConfigError("--limit must be at least 1");
        if (!config.pipeline.judge)
            throw ConfigError("eval needs pipeline.judge");
        if (config.dataset_path.empty())
            throw ConfigError("eval needs dataset_path");
        validate_environment(config);

        auto records = eval::load_dataset(config.dataset_path);
        std::vector<std::string> types = options.types;
        std::sort(types.begin(), types.end());
        types.erase(std::unique(types.begin(), types.end()), types.end());
        if (!types.empty())
        {
            std::erase_if(records, [&](auto const& r) {
                return !std::binary_search(types.begin(), types.end(), r.question_type);
            });
            for (auto const& t : types)
                if (std::none_of(records.begin(), records.end(), [&](auto const& r) { return r.question_type == t; }))
                    console.err << "warning: no records of type '" << t << "'\n";
        }
        auto const per_type = options.limit.value_or(config.sample_n);
        auto const selected = eval::sample_per_type(records, per_type, config.seed);
        if (selected.empty())
            throw eval::EmptyInput("no records selected for evaluation");

        auto const& out = config.output_dir;
        auto const verdicts_path = out / verdicts_file;
        auto const runtimes_path = out / runtimes_file;
        auto const manifest_path = out / manifest_file;
        auto const manifest = manifest_for(config, types, per_type, selected);

        std::set<std::string> done;
        bool const have_manifest = fs::exists(manifest_path);
        if (options.resume && have_manifest)
        {
            json previous;
            try
            {
                previous = json::parse(read_text_file(manifest_path));
            }
            catch (const json::exception&)
            {
                throw ConfigError(fmt::format("'{}' is corrupt", manifest_path.string()));
            }
            if (previous != manifest)
                throw ConfigError(fmt::format(
                    "'{}' belongs to a run with a different dataset, seed, types or limit", out.string()));
        }
        else if (!options.resume && (have_manifest || non_empty_file(verdicts_path) || non_empty_file(runtimes_path)))
            throw ConfigError(
                fmt::format("'{}' already holds an eval run; pass --resume or choose another --out", out.string()));
        if (options.resume)
            done = recover_logs(verdicts_path, runtimes_path, console);
        else
        {
            write_text_file(verdicts_path, "");
            write_text_file(runtimes_path, "");
        }
        if (!have_manifest)
            write_text_file(manifest_path, manifest.dump(2) + "\n");

        std::vector<eval::EvalRecord> pending;
        for (auto const& r : selected)
            if (!done.contains(r.record_id))
                pending.push_back(r);
        if (!done.empty())
            console.out << fmt::format("resuming: {} of {} records already evaluated\n", done.size(),
                                       selected.size());

        ensure_dir(out / "audit");
        Engine engine(config, console);
        AppendLog verdict_log(verdicts_path);
        AppendLog runtime_log(runtimes_path);
        std::size_t finished = done.size();

        eval::RunOptions run;
        run.concurrency = config.concurrency_limit;
        run.on_record = [&](const eval::RecordOutcome& o) {
            write_audit_file(o.result.memory, o.result.final_answer, audit_path(out, o.record.record_id));
            // The verdict goes last: it marks the record done for --resume.
            runtime_log.write_line(eval::to_json_line(o.runtime));
            verdict_log.write_line(eval::to_json_line(o.verdict));
            console.out << fmt::format("[{}/{}] {} {}{}\n", ++finished, selected.size(), o.record.record_id,
                                       parsing::to_string(o.verdict.verdict), o.verdict.unparseable ? " (unparseable)" : "");
        };
        try
        {
            eval::evaluate(pending, engine.pipeline(), config.pipeline, engine.gateway(), run);
        }
        catch (const orchestrator::PhaseError& e)
        {
            save_failed_audit(e, out, console);
            console.err << fmt::format("progress kept in '{}'; rerun with --resume to continue\n", out.string());
            throw;
        }

        write_reports(verdicts_path, runtimes_path, out, console);
        return int(exit_ok);
    });
}

int cmd_report(const ReportOptions& options, const Console& console)
{
    return guarded(console, [&] {
        for (auto const& p : {options.verdicts_path, options.runtimes_path})
            if (std::error_code ec; !fs::is_regular_file(p, ec))
                throw IoError(fmt::format("'{}' does not exist", p.string()));
        write_reports(options.verdicts_path, options.runtimes_path, options.out, console);
        return int(exit_ok);
    });
}

}  // namespace vra::cli
