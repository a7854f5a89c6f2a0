// Command-line front end: ask, eval, report.

#include "vra/cli/app.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>

int main(int argc, char** argv)
{
    using namespace vra::cli;

    CLI::App app{"Agentic visual reasoning over images with a text backbone and a vision model suite"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Log debug output");

    AskOptions ask;
    auto* ask_cmd = app.add_subcommand("ask", "Answer one question about one image");
    ask_cmd->add_option("--config", ask.config_path, "Config file")->required();
    ask_cmd->add_option("--image", ask.image_path, "Image file")->required();
    ask_cmd->add_option("--question", ask.question, "Question")->required();
    ask_cmd->add_option("--out", ask.out, "Output directory, overrides output_dir");

    EvalOptions ev;
    auto* eval_cmd = app.add_subcommand("eval", "Run the benchmark and write verdicts and reports");
    eval_cmd->add_option("--config", ev.config_path, "Config file")->required();
    eval_cmd->add_option("--types", ev.types, "Only these question types (comma separated)")->delimiter(',');
    eval_cmd->add_option("--limit", ev.limit, "Records per type, overrides sample_n");
    eval_cmd->add_flag("--resume", ev.resume, "Continue an interrupted run in the same output directory");
    eval_cmd->add_option("--out", ev.out, "Output directory, overrides output_dir");
    eval_cmd->add_option("--seed", ev.seed, "Sampling seed, overrides seed");
    eval_cmd->add_option("--concurrency", ev.concurrency, "Records in flight, overrides concurrency_limit");

    ReportOptions rep;
    auto* report_cmd = app.add_subcommand("report", "Rebuild reports from verdict and runtime logs");
    report_cmd->add_option("--verdicts", rep.verdicts_path, "verdicts.jsonl")->required();
    report_cmd->add_option("--runtimes", rep.runtimes_path, "runtimes.jsonl")->required();
    report_cmd->add_option("--out", rep.out, "Output directory")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        auto const code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
    Console const console{std::cout, std::cerr};
    if (*ask_cmd)
        return cmd_ask(ask, console);
    if (*eval_cmd)
        return cmd_eval(ev, console);
    return cmd_report(rep, console);
}
