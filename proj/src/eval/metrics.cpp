#include "vra/eval/harness.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <tuple>
#include <numeric>
#include <set>

namespace vra::eval {

namespace {

double mean_of(const std::map<std::string, double>& cells)
{
    double sum = 0.0;
    for (auto const& [_, v] : cells)
        sum += v;
    return sum / double(cells.size());
}

std::set<std::string> keys_of(const std::map<std::string, double>& cells)
{
    std::set<std::string> out;
    for (auto const& [k, _] : cells)
        out.insert(k);
    return out;
}

}  // namespace

MatchVerdict judge(const gateway::Gateway& gateway, const EvalRecord& record, std::string_view prediction,
                   const gateway::BackendConfig& judge_backend)
{
    MatchVerdict v{record.record_id, record.question_type, std::string(prediction), parsing::Verdict::no_match, false,
                   0.0};
    if (prediction.find_first_not_of(" \t\r\n") == std::string_view::npos)
        return v;

    auto const prompt = gateway.registry().render(prompts::TemplateId::judge_user,
                                                  {{"question", record.question},
                                                   {"ground_truth", record.ground_truth},
                                                   {"prediction", std::string(prediction)}});
    std::vector<gateway::ChatMessage> const messages{{gateway::MessageRole::user, prompt.user_text, std::nullopt, 0}};
    auto const start = std::chrono::steady_clock::now();
    try
    {
        auto const reply = gateway.chat(judge_backend, messages, {Role::judge, 0, record.question});
        v.judge_latency_s = reply.latency_s;
        v.verdict = parsing::parse_judge_verdict(parsing::strip_reasoning(reply.text));
    }
    catch (const parsing::UnparseableVerdict& e)
    {
        spdlog::warn("record {}: {}", record.record_id, e.what());
        v.unparseable = true;
    }
    catch (const gateway::GatewayError& e)
    {
        spdlog::warn("record {}: judge call failed: {}", record.record_id, e.what());
        v.unparseable = true;
        v.judge_latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return v;
}

RunReport RunReport::from_accuracy(std::map<std::string, double> per_type)
{
    RunReport r;
    r.per_type_accuracy = std::move(per_type);
    r.overall_accuracy = r.per_type_accuracy.empty() ? 0.0 : mean_of(r.per_type_accuracy);
    return r;
}

RunReport RunReport::overall_only(double overall_accuracy)
{
    RunReport r;
    r.overall_accuracy = overall_accuracy;
    return r;
}

RunReport aggregate(const std::vector<MatchVerdict>& verdicts, const std::vector<RuntimeRecord>& runtimes)
{
    if (verdicts.empty())
        throw EmptyInput("no verdicts to aggregate");

    std::map<std::string, double> runtime_of;
    for (auto const& r : runtimes)
        runtime_of[r.record_id] = r.runtime_s;

    std::map<std::string, int> matches;
    std::map<std::string, double> runtime_sum;
    std::map<std::string, int> runtime_n;
    double record_sum = 0.0;
    int record_n = 0;

    // Fixed order so floating-point sums do not depend on log order.
    std::vector<const MatchVerdict*> ordered;
    for (auto const& v : verdicts)
        ordered.push_back(&v);
    std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) {
        return std::tie(a->question_type, a->record_id) < std::tie(b->question_type, b->record_id);
    });

    RunReport report;
    for (auto const* pv : ordered)
    {
        auto const& v = *pv;
        if (v.question_type.empty())
            throw std::invalid_argument(fmt::format("verdict for record '{}' has no type", v.record_id));
        ++report.counts[v.question_type];
        matches[v.question_type] += (v.verdict == parsing::Verdict::match && !v.unparseable) ? 1 : 0;
        if (v.unparseable)
            ++report.unparseable[v.question_type];
        if (auto it = runtime_of.find(v.record_id); it != runtime_of.end())
        {
            auto const minutes = it->second / 60.0;
            runtime_sum[v.question_type] += minutes;
            ++runtime_n[v.question_type];
            record_sum += minutes;
            ++record_n;
        }
    }

    for (auto const& [type, n] : report.counts)
        report.per_type_accuracy[type] = 100.0 * matches[type] / n;
    report.overall_accuracy = mean_of(report.per_type_accuracy);

    for (auto const& [type, sum] : runtime_sum)
        report.per_type_runtime[type] = sum / runtime_n[type];
    if (!report.per_type_runtime.empty())
    {
        report.overall_runtime = mean_of(report.per_type_runtime);
        report.overall_runtime_record_mean = record_sum / record_n;
    }
    return report;
}

RunReport baseline_average(const std::vector<RunReport>& reports)
{
    if (reports.empty())
        throw std::invalid_argument("nothing to average");
    auto const types = keys_of(reports.front().per_type_accuracy);
    for (auto const& r : reports)
        if (keys_of(r.per_type_accuracy) != types)
            throw TypeSetMismatch("reports cover different question types");

    auto const k = double(reports.size());
    RunReport out;
    if (types.empty())
    {
        double sum = 0.0;
        for (auto const& r : reports)
            sum += r.overall_accuracy;
        out.overall_accuracy = sum / k;
    }
    else
    {
        for (auto const& t : types)
        {
            double sum = 0.0;
            for (auto const& r : reports)
                sum += r.per_type_accuracy.at(t);
            out.per_type_accuracy[t] = sum / k;
        }
        out.overall_accuracy = mean_of(out.per_type_accuracy);
    }

    // Runtime cells are averaged only where every report has one.
    for (auto const& t : types)
    {
        double sum = 0.0;
        bool all = true;
        for (auto const& r : reports)
        {
            auto it = r.per_type_runtime.find(t);
            all = all && it != r.per_type_runtime.end();
            if (all)
                sum += it->second;
        }
        if (all)
            out.per_type_runtime[t] = sum / k;
    }
    if (!out.per_type_runtime.empty())
        out.overall_runtime = mean_of(out.per_type_runtime);
    else if (std::all_of(reports.begin(), reports.end(), [](auto const& r) { return r.overall_runtime.has_value(); }))
    {
        double sum = 0.0;
        for (auto const& r : reports)
            sum += *r.overall_runtime;
        out.overall_runtime = sum / k;
    }
    if (std::all_of(reports.begin(), reports.end(),
                    [](auto const& r) { return r.overall_runtime_record_mean.has_value(); }))
    {
        double sum = 0.0;
        for (auto const& r : reports)
            sum += *r.overall_runtime_record_mean;
        out.overall_runtime_record_mean = sum / k;
    }

    for (auto const& r : reports)
    {
        for (auto const& [t, n] : r.counts)
            out.counts[t] += n;
        for (auto const& [t, n] : r.unparseable)
            out.unparseable[t] += n;
    }
    return out;
}

std::map<std::string, double> improvement(const RunReport& a, const RunReport& b)
{
    if (keys_of(a.per_type_accuracy) != keys_of(b.per_type_accuracy))
        throw TypeSetMismatch("reports cover different question types");
    std::map<std::string, double> delta;
    for (auto const& [t, v] : a.per_type_accuracy)
        delta[t] = b.per_type_accuracy.at(t) - v;
    delta["overall"] = b.overall_accuracy - a.overall_accuracy;
    return delta;
}

}  // namespace vra::eval
