#pragma once

#include "vra/core/clock.hpp"
#include "vra/core/errors.hpp"
#include "vra/orchestrator/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace vra::cli {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_pipeline = 2, exit_io = 3 };

class ConfigError : public Error {
public:
    using Error::Error;
};

// Replaces the wall clock for reproducible runs: every read advances
// `step` from `start`.
struct StepClockConfig {
    Timestamp start;
    std::chrono::milliseconds step{1000};
};

struct AppConfig {
    orchestrator::PipelineConfig pipeline;
    std::filesystem::path dataset_path;
    int sample_n = 50;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";
    int concurrency_limit = 1;
    int max_in_flight = 16;
    std::filesystem::path template_dir;
    std::optional<StepClockConfig> clock;
};

// Reads a JSON config. Paths inside it resolve against the file's
// directory. Throws ConfigError for anything malformed, including mock
// scripts that do not parse.
AppConfig load_config(const std::filesystem::path& path);

// Checks what can only be known at run time: every auth_token_env is set
// and output_dir can be created and written. Throws ConfigError.
void validate_environment(const AppConfig& config);

// Where a command writes and reports. `clock` overrides the one the
// config selects.
struct Console {
    std::ostream& out;
    std::ostream& err;
    const Clock* clock = nullptr;
};

struct AskOptions {
    std::filesystem::path config_path;
    std::filesystem::path image_path;
    std::string question;
    std::optional<std::filesystem::path> out;
};

struct EvalOptions {
    std::filesystem::path config_path;
    std::vector<std::string> types;  // empty means all
    std::optional<int> limit;        // per-type cap, replaces sample_n
    bool resume = false;
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> concurrency;
};

struct ReportOptions {
    std::filesystem::path verdicts_path;
    std::filesystem::path runtimes_path;
    std::filesystem::path out;
};

// Each returns an ExitCode and prints errors to console.err.
int cmd_ask(const AskOptions& options, const Console& console);
int cmd_eval(const EvalOptions& options, const Console& console);
int cmd_report(const ReportOptions& options, const Console& console);

// File names inside an eval output directory.
inline constexpr const char* verdicts_file = "verdicts.jsonl";
inline constexpr const char* runtimes_file = "runtimes.jsonl";
inline constexpr const char* manifest_file = "run.json";
inline constexpr const char* report_stem = "report";

// Cuts a log back to its last newline, dropping a torn final write.
// Returns the number of bytes removed.
std::uintmax_t trim_to_last_newline(const std::filesystem::path& path);

}  // namespace vra::cli
