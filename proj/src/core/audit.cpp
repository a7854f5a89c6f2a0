#include "vra/core/audit.hpp"

#include "vra/core/errors.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace vra {

using nlohmann::json;

namespace {

json turn_record(const std::string& task_id, std::size_t seq, const AgentTurn& turn)
{
    return json{
        {"task_id", task_id},
        {"seq", seq},
        {"role", to_string(turn.role)},
        {"backend_id", turn.backend_id},
        {"iteration", turn.iteration},
        {"started_at", format_iso8601(turn.started_at)},
        {"ended_at", format_iso8601(turn.ended_at)},
        {"prompt_rendered", turn.prompt_rendered},
        {"response_raw", turn.response_raw},
    };
}

AgentTurn turn_from_record(const json& record)
{
    AgentTurn turn;
    turn.role = role_from_string(record.at("role").get<std::string>());
    turn.backend_id = record.at("backend_id").get<std::string>();
    turn.iteration = record.at("iteration").get<int>();
    turn.started_at = parse_iso8601(record.at("started_at").get<std::string>());
    turn.ended_at = parse_iso8601(record.at("ended_at").get<std::string>());
    turn.prompt_rendered = record.at("prompt_rendered").get<std::string>();
    turn.response_raw = record.at("response_raw").get<std::string>();
    return turn;
}

}  // namespace

AuditTrail make_audit(const ConversationMemory& memory, std::string final_answer)
{
    if (memory.empty())
        throw std::invalid_argument("cannot audit an empty memory");

    auto const turns = memory.turns();
    AuditTrail trail;
    trail.task_id = memory.task().task_id;
    trail.turns.assign(turns.begin(), turns.end());
    trail.final_answer = std::move(final_answer);
    trail.total_latency_s = seconds_between(turns.front().started_at, turns.back().ended_at);
    return trail;
}

AuditTrail write_audit(const ConversationMemory& memory, std::string final_answer, std::ostream& sink)
{
    auto trail = make_audit(memory, std::move(final_answer));

    // Serialize fully before touching the sink so a failure leaves no half record.
    std::string buffer;
    for (std::size_t seq = 0; seq < trail.turns.size(); ++seq)
    {
        buffer += turn_record(trail.task_id, seq, trail.turns[seq]).dump();
        buffer += '\n';
    }
    buffer += json{
        {"task_id", trail.task_id},
        {"final_answer", trail.final_answer},
        {"total_latency_s", trail.total_latency_s},
    }.dump();
    buffer += '\n';

    if (!sink.good())
        throw IoError(fmt::format("audit sink for task '{}' is not writable", trail.task_id));
    sink.write(buffer.data(), std::streamsize(buffer.size()));
    sink.flush();
    if (!sink.good())
        throw IoError(fmt::format("failed writing audit for task '{}'", trail.task_id));
    return trail;
}

AuditTrail write_audit_file(const ConversationMemory& memory, std::string final_answer,
                            const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError(fmt::format("cannot open audit file '{}'", path.string()));
    return write_audit(memory, std::move(final_answer), out);
}

AuditTrail read_audit(std::istream& source)
{
    AuditTrail trail;
    bool closed = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(source, line))
    {
        ++line_no;
        if (line.empty())
            continue;
        if (closed)
            throw IoError(fmt::format("audit line {}: record after summary", line_no));
        try
        {
            auto const record = json::parse(line);
            if (record.contains("final_answer"))
            {
                trail.task_id = record.at("task_id").get<std::string>();
                trail.final_answer = record.at("final_answer").get<std::string>();
                trail.total_latency_s = record.at("total_latency_s").get<double>();
                closed = true;
                continue;
            }
            if (record.at("seq").get<std::size_t>() != trail.turns.size())
                throw IoError(fmt::format("audit line {}: sequence gap", line_no));
            trail.turns.push_back(turn_from_record(record));
        }
        catch (const IoError&)
        {
            throw;
        }
        catch (const std::exception& e)
        {
            throw IoError(fmt::format("audit line {}: {}", line_no, e.what()));
        }
    }
    if (!closed)
        throw IoError("audit trail has no summary record");
    return trail;
}

AuditTrail read_audit_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(fmt::format("cannot open audit file '{}'", path.string()));
    return read_audit(in);
}

}  // namespace vra
