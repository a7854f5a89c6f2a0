#pragma once

#include "vra/core/types.hpp"

#include <span>
#include <vector>

namespace vra {

// Append-only transcript shared by all roles of one task. Copies are
// independent snapshots.
class ConversationMemory {
public:
    explicit ConversationMemory(VqaTask task) : task_(std::move(task)) {}

    const VqaTask& task() const { return task_; }
    std::span<const AgentTurn> turns() const { return turns_; }
    std::size_t size() const { return turns_.size(); }
    bool empty() const { return turns_.empty(); }

    // Throws InvalidTurn when ended_at precedes started_at.
    void append(AgentTurn turn);

private:
    VqaTask task_;
    std::vector<AgentTurn> turns_;
};

ConversationMemory append_turn(ConversationMemory memory, AgentTurn turn);

// response_raw of the most recent turn with the given role; NoSuchTurn if absent.
const std::string& latest_response(const ConversationMemory& memory, Role role);

// Most recent turn with the given role, or nullptr.
const AgentTurn* latest_turn(const ConversationMemory& memory, Role role);

}  // namespace vra
