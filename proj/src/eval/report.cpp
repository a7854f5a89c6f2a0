#include "vra/eval/harness.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace vra::eval {

using nlohmann::json;

namespace {

std::string fixed2(double v)
{
    if (std::fabs(v) < 0.005)
        v = 0.0;
    return fmt::format("{:.2f}", v);
}

struct Row {
    std::string label;
    std::vector<std::string> cells;  // one per type column, then overall
};

std::vector<std::string> columns_of(const RunReport& report)
{
    std::vector<std::string> types;
    for (auto const& [t, _] : report.per_type_accuracy)
        types.push_back(t);
    return column_order(types);
}

std::vector<Row> rows_of(const RunReport& report, const std::vector<std::string>& columns, const std::string& missing)
{
    Row acc{"accuracy", {}}, rt{"runtime_min", {}}, n{"n", {}}, bad{"unparseable", {}};
    int n_total = 0, bad_total = 0;
    for (auto const& c : columns)
    {
        acc.cells.push_back(fixed2(report.per_type_accuracy.at(c)));
        auto it = report.per_type_runtime.find(c);
        rt.cells.push_back(it == report.per_type_runtime.end() ? missing : fixed2(it->second));
        auto const count = report.counts.contains(c) ? report.counts.at(c) : 0;
        auto const unparseable = report.unparseable.contains(c) ? report.unparseable.at(c) : 0;
        n.cells.push_back(std::to_string(count));
        bad.cells.push_back(std::to_string(unparseable));
        n_total += count;
        bad_total += unparseable;
    }
    acc.cells.push_back(fixed2(report.overall_accuracy));
    rt.cells.push_back(report.overall_runtime ? fixed2(*report.overall_runtime) : missing);
    n.cells.push_back(std::to_string(n_total));
    bad.cells.push_back(std::to_string(bad_total));

    std::vector<Row> rows{acc, rt, n, bad};
    if (report.overall_runtime_record_mean)
    {
        Row rec{"runtime_min_record_mean", std::vector<std::string>(columns.size(), missing)};
        rec.cells.push_back(fixed2(*report.overall_runtime_record_mean));
        rows.push_back(std::move(rec));
    }
    return rows;
}

std::string render_csv(const RunReport& report)
{
    auto const columns = columns_of(report);
    std::string out = "metric";
    for (auto const& c : columns)
        out += "," + c;
    out += ",overall\n";
    for (auto const& row : rows_of(report, columns, ""))
    {
        out += row.label;
        for (auto const& cell : row.cells)
            out += "," + cell;
        out += "\n";
    }
    return out;
}

std::string render_table(const RunReport& report)
{
    auto columns = columns_of(report);
    auto const rows = rows_of(report, columns, "-");
    columns.push_back("overall");

    std::size_t label_w = std::string_view("metric").size();
    for (auto const& r : rows)
        label_w = std::max(label_w, r.label.size());
    std::vector<std::size_t> widths;
    for (std::size_t i = 0; i < columns.size(); ++i)
    {
        auto w = columns[i].size();
        for (auto const& r : rows)
            w = std::max(w, r.cells[i].size());
        widths.push_back(w);
    }

    std::string out = fmt::format("{:<{}}", "metric", label_w);
    for (std::size_t i = 0; i < columns.size(); ++i)
        out += fmt::format(" | {:>{}}", columns[i], widths[i]);
    out += "\n" + std::string(label_w, '-');
    for (auto w : widths)
        out += "-+-" + std::string(w, '-');
    out += "\n";
    for (auto const& r : rows)
    {
        out += fmt::format("{:<{}}", r.label, label_w);
        for (std::size_t i = 0; i < r.cells.size(); ++i)
            out += fmt::format(" | {:>{}}", r.cells[i], widths[i]);
        out += "\n";
    }
    return out;
}

json optional_number(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

std::optional<double> number_or_null(const json& j, const char* key)
{
    auto it = j.find(key);
    if (it == j.end() || it->is_null())
        return std::nullopt;
    return it->get<double>();
}

std::string render_structured(const RunReport& report)
{
    json j{
        {"columns", columns_of(report)},
        {"per_type_accuracy", report.per_type_accuracy},
        {"overall_accuracy", report.overall_accuracy},
        {"per_type_runtime_min", report.per_type_runtime},
        {"overall_runtime_min", optional_number(report.overall_runtime)},
        {"overall_runtime_record_mean_min", optional_number(report.overall_runtime_record_mean)},
        {"counts", report.counts},
        {"unparseable", report.unparseable},
    };
    return j.dump(2) + "\n";
}

std::string_view view_line(std::string_view text)
{
    while (!text.empty() && (text.back() == '\r' || text.back() == '\n'))
        text.remove_suffix(1);
    return text;
}

template <typename T, typename Parse>
std::vector<T> read_log(const std::filesystem::path& path, Parse parse)
{
    std::vector<T> out;
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        std::error_code ec;
        if (std::filesystem::exists(path, ec))
            throw IoError(fmt::format("cannot open '{}'", path.string()));
        return out;
    }
    std::string const content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < content.size())
    {
        ++line_no;
        auto const nl = content.find('\n', pos);
        auto const complete = nl != std::string::npos;
        auto const line = view_line(std::string_view(content).substr(pos, complete ? nl - pos : std::string::npos));
        pos = complete ? nl + 1 : content.size();
        if (line.find_first_not_of(" \t") == std::string_view::npos)
            continue;
        try
        {
            out.push_back(parse(line, line_no));
        }
        catch (const SchemaError&)
        {
            if (complete)
                throw;
        }
    }
    return out;
}

}  // namespace

std::string_view extension(ReportFormat format)
{
    switch (format)
    {
    case ReportFormat::table_text: return ".txt";
    case ReportFormat::csv: return ".csv";
    case ReportFormat::structured: return ".json";
    }
    return "";
}

std::string render_report(const RunReport& report, ReportFormat format)
{
    switch (format)
    {
    case ReportFormat::table_text: return render_table(report);
    case ReportFormat::csv: return render_csv(report);
    case ReportFormat::structured: return render_structured(report);
    }
    throw std::invalid_argument("unknown report format");
}

void emit_report(const RunReport& report, ReportFormat format, const std::filesystem::path& path)
{
    auto const text = render_report(report, format);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError(fmt::format("cannot write report '{}'", path.string()));
    out << text;
    out.flush();
    if (!out)
        throw IoError(fmt::format("failed writing report '{}'", path.string()));
}

RunReport parse_structured_report(std::string_view text)
{
    try
    {
        auto const j = json::parse(text);
        RunReport r;
        r.per_type_accuracy = j.at("per_type_accuracy").get<std::map<std::string, double>>();
        r.overall_accuracy = j.at("overall_accuracy").get<double>();
        r.per_type_runtime = j.at("per_type_runtime_min").get<std::map<std::string, double>>();
        r.overall_runtime = number_or_null(j, "overall_runtime_min");
        r.overall_runtime_record_mean = number_or_null(j, "overall_runtime_record_mean_min");
        r.counts = j.at("counts").get<std::map<std::string, int>>();
        r.unparseable = j.at("unparseable").get<std::map<std::string, int>>();
        return r;
    }
    catch (const json::exception& e)
    {
        throw SchemaError(1, fmt::format("not a structured report: {}", e.what()));
    }
}

std::string to_json_line(const MatchVerdict& v)
{
    return json{
        {"record_id", v.record_id},
        {"type", v.question_type},
        {"prediction", v.prediction},
        {"verdict", parsing::to_string(v.verdict)},
        {"unparseable", v.unparseable},
        {"judge_latency_s", v.judge_latency_s},
    }.dump();
}

std::string to_json_line(const RuntimeRecord& r)
{
    return json{{"record_id", r.record_id}, {"type", r.question_type}, {"runtime_s", r.runtime_s}}.dump();
}

MatchVerdict verdict_from_json(std::string_view line, int line_no)
{
    try
    {
        auto const j = json::parse(line);
        MatchVerdict v;
        v.record_id = j.at("record_id").get<std::string>();
        v.question_type = j.at("type").get<std::string>();
        v.prediction = j.at("prediction").get<std::string>();
        auto const verdict = j.at("verdict").get<std::string>();
        if (verdict != "match" && verdict != "no_match")
            throw SchemaError(line_no, fmt::format("unknown verdict '{}'", verdict));
        v.verdict = verdict == "match" ? parsing::Verdict::match : parsing::Verdict::no_match;
        v.unparseable = j.at("unparseable").get<bool>();
        v.judge_latency_s = j.at("judge_latency_s").get<double>();
        if (v.record_id.empty() || v.question_type.empty())
            throw SchemaError(line_no, "verdict without record_id or type");
        return v;
    }
    catch (const json::exception& e)
    {
        throw SchemaError(line_no, fmt::format("bad verdict record: {}", e.what()));
    }
}

RuntimeRecord runtime_from_json(std::string_view line, int line_no)
{
    try
    {
        auto const j = json::parse(line);
        RuntimeRecord r{j.at("record_id").get<std::string>(), j.at("type").get<std::string>(),
                        j.at("runtime_s").get<double>()};
        if (r.record_id.empty() || r.runtime_s < 0)
            throw SchemaError(line_no, "runtime without record_id or with a negative value");
        return r;
    }
    catch (const json::exception& e)
    {
        throw SchemaError(line_no, fmt::format("bad runtime record: {}", e.what()));
    }
}

std::vector<MatchVerdict> read_verdicts(const std::filesystem::path& path)
{
    return read_log<MatchVerdict>(path, verdict_from_json);
}

std::vector<RuntimeRecord> read_runtimes(const std::filesystem::path& path)
{
    return read_log<RuntimeRecord>(path, runtime_from_json);
}

}  // namespace vra::eval
