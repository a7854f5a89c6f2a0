#pragma once

#include "vra/core/memory.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace vra {

// Persisted record of every prompt and reply of one task.
//
// On disk it is JSON Lines: one object per turn with the fields
// task_id, seq, role, backend_id, iteration, started_at, ended_at,
// prompt_rendered, response_raw; then a closing object with task_id,
// final_answer and total_latency_s.
struct AuditTrail {
    std::string task_id;
    std::vector<AgentTurn> turns;
    std::string final_answer;
    // From the first turn's start to the last turn's end.
    double total_latency_s = 0.0;

    friend bool operator==(const AuditTrail&, const AuditTrail&) = default;
};

AuditTrail make_audit(const ConversationMemory& memory, std::string final_answer);

// Throws std::invalid_argument on empty memory and IoError when the sink
// rejects a write.
AuditTrail write_audit(const ConversationMemory& memory, std::string final_answer, std::ostream& sink);
AuditTrail write_audit_file(const ConversationMemory& memory, std::string final_answer,
                            const std::filesystem::path& path);

// Throws IoError on malformed input.
AuditTrail read_audit(std::istream& source);
AuditTrail read_audit_file(const std::filesystem::path& path);

}  // namespace vra
