#include "vra/core/memory.hpp"

#include "vra/core/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>

namespace vra {

namespace {

constexpr std::array role_names{
    std::pair{Role::captioner, std::string_view{"captioner"}},
    std::pair{Role::drafter, std::string_view{"drafter"}},
    std::pair{Role::inquirer, std::string_view{"inquirer"}},
    std::pair{Role::vision_suite, std::string_view{"vision_suite"}},
    std::pair{Role::revisor, std::string_view{"revisor"}},
    std::pair{Role::spokesman, std::string_view{"spokesman"}},
    std::pair{Role::judge, std::string_view{"judge"}},
};

}  // namespace

std::string_view to_string(Role role)
{
    for (auto const& [r, name] : role_names)
        if (r == role)
            return name;
    return "unknown";
}

Role role_from_string(std::string_view name)
{
    for (auto const& [r, n] : role_names)
        if (n == name)
            return r;
    throw std::invalid_argument(fmt::format("unknown role '{}'", name));
}

void validate(const VqaTask& task)
{
    auto const blank = std::all_of(task.question.begin(), task.question.end(),
                                   [](unsigned char c) { return std::isspace(c); });
    if (blank)
        throw std::invalid_argument(fmt::format("task '{}' has an empty question", task.task_id));
}

void ConversationMemory::append(AgentTurn turn)
{
    if (turn.ended_at < turn.started_at)
        throw InvalidTurn(fmt::format("{} turn ends before it starts", to_string(turn.role)));
    turns_.push_back(std::move(turn));
}

ConversationMemory append_turn(ConversationMemory memory, AgentTurn turn)
{
    memory.append(std::move(turn));
    return memory;
}

const AgentTurn* latest_turn(const ConversationMemory& memory, Role role)
{
    auto const turns = memory.turns();
    auto const it = std::find_if(turns.rbegin(), turns.rend(), [role](const AgentTurn& t) { return t.role == role; });
    return it == turns.rend() ? nullptr : &*it;
}

const std::string& latest_response(const ConversationMemory& memory, Role role)
{
    if (auto const* turn = latest_turn(memory, role))
        return turn->response_raw;
    throw NoSuchTurn(fmt::format("no {} turn in memory", to_string(role)));
}

}  // namespace vra
