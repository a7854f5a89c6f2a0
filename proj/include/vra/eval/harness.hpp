#pragma once

#include "vra/core/errors.hpp"
#include "vra/core/types.hpp"
#include "vra/gateway/gateway.hpp"
#include "vra/parsing/parsing.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vra::eval {

// The benchmark's question types in report column order.
inline constexpr std::array<std::string_view, 10> known_types{
    "obj_quantity", "obj_position", "obj_direction", "obj_size",  "reasoning",
    "obj_color",    "obj_existence", "obj_category", "obj_shape", "scene_type",
};

bool is_known_type(std::string_view type);

// Known types in their fixed order, then any others sorted.
std::vector<std::string> column_order(const std::vector<std::string>& types);

struct EvalRecord {
    std::string record_id;
    ImageRef image;
    std::string question;
    std::string ground_truth;
    std::string question_type;

    friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

VqaTask to_task(const EvalRecord& record);

class LineError : public Error {
public:
    LineError(int line, const std::string& message);
    int line() const { return line_; }

private:
    int line_;
};

class SchemaError : public LineError {
public:
    using LineError::LineError;
};

class ImageRefError : public LineError {
public:
    using LineError::LineError;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class TypeSetMismatch : public Error {
public:
    using Error::Error;
};

// One JSON object per line: image_path, question, ground_truth, type and an
// optional id (defaults to the zero-padded line number). Relative image
// paths resolve against the dataset's directory. Unknown types are kept
// with a warning. Throws IoError, SchemaError or ImageRefError.
std::vector<EvalRecord> load_dataset(const std::filesystem::path& path);

// Up to n records per type, drawn without replacement by a seeded
// generator; the draw depends only on (records, n, seed). Output is ordered
// by (type, record_id). Types with fewer than n records are kept whole.
std::vector<EvalRecord> sample_per_type(const std::vector<EvalRecord>& records, int n, std::uint64_t seed);

struct MatchVerdict {
    std::string record_id;
    std::string question_type;
    std::string prediction;
    parsing::Verdict verdict = parsing::Verdict::no_match;
    // The judge reply held no verdict or the judge call failed. Always scored no_match.
    bool unparseable = false;
    double judge_latency_s = 0.0;

    friend bool operator==(const MatchVerdict&, const MatchVerdict&) = default;
};

// Empty predictions score no_match without calling the judge.
MatchVerdict judge(const gateway::Gateway& gateway, const EvalRecord& record, std::string_view prediction,
                   const gateway::BackendConfig& judge_backend);

struct RuntimeRecord {
    std::string record_id;
    std::string question_type;
    double runtime_s = 0.0;

    friend bool operator==(const RuntimeRecord&, const RuntimeRecord&) = default;
};

struct RunReport {
    std::map<std::string, double> per_type_accuracy;  // percent
    double overall_accuracy = 0.0;
    std::map<std::string, double> per_type_runtime;  // minutes
    std::optional<double> overall_runtime;            // mean of per-type means
    std::optional<double> overall_runtime_record_mean;  // mean over records
    std::map<std::string, int> counts;
    std::map<std::string, int> unparseable;

    // Per-type accuracies with the overall as their unweighted mean.
    static RunReport from_accuracy(std::map<std::string, double> per_type);
    // A headline number with no per-type breakdown.
    static RunReport overall_only(double overall_accuracy);

    friend bool operator==(const RunReport&, const RunReport&) = default;
};

// Throws EmptyInput when there are no verdicts. Runtimes are matched to
// verdicts by record_id; types without runtimes get no runtime cell.
RunReport aggregate(const std::vector<MatchVerdict>& verdicts, const std::vector<RuntimeRecord>& runtimes);

// Cell-wise mean of reports sharing a type set. Throws TypeSetMismatch or
// std::invalid_argument on an empty list.
RunReport baseline_average(const std::vector<RunReport>& reports);

// b - a for every accuracy cell plus "overall". Throws TypeSetMismatch.
std::map<std::string, double> improvement(const RunReport& a, const RunReport& b);

enum class ReportFormat { table_text, csv, structured };

std::string_view extension(ReportFormat format);
std::string render_report(const RunReport& report, ReportFormat format);
// Throws IoError.
void emit_report(const RunReport& report, ReportFormat format, const std::filesystem::path& path);
// Inverse of the structured format. Throws SchemaError.
RunReport parse_structured_report(std::string_view text);

// Line formats of the incremental verdict and runtime logs.
std::string to_json_line(const MatchVerdict& v);
std::string to_json_line(const RuntimeRecord& r);
MatchVerdict verdict_from_json(std::string_view line, int line_no);
RuntimeRecord runtime_from_json(std::string_view line, int line_no);

// Reads a JSON Lines log. A final line without a trailing newline that
// fails to parse is treated as an interrupted write and dropped; any other
// bad line throws SchemaError. A missing file reads as empty.
std::vector<MatchVerdict> read_verdicts(const std::filesystem::path& path);
std::vector<RuntimeRecord> read_runtimes(const std::filesystem::path& path);

}  // namespace vra::eval
