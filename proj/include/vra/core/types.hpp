#pragma once

#include "vra/core/clock.hpp"
#include "vra/core/image.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vra {

enum class Role { captioner, drafter, inquirer, vision_suite, revisor, spokesman, judge };

std::string_view to_string(Role role);
// Throws std::invalid_argument on an unknown name.
Role role_from_string(std::string_view name);

struct VqaTask {
    std::string task_id;
    ImageRef image;
    std::string question;
    std::optional<std::string> question_type;
    std::optional<std::string> ground_truth;

    friend bool operator==(const VqaTask&, const VqaTask&) = default;
};

// Throws std::invalid_argument when the question is blank.
void validate(const VqaTask& task);

// One backend call (or local step) made while answering a task.
struct AgentTurn {
    Role role = Role::captioner;
    std::string backend_id;
    std::string prompt_rendered;
    std::string response_raw;
    Timestamp started_at{};
    Timestamp ended_at{};
    // 0 for captioner and drafter, 1..K inside the loop, K+1 for the spokesman.
    int iteration = 0;

    friend bool operator==(const AgentTurn&, const AgentTurn&) = default;
};

struct Reference {
    int index = 0;
    std::string text;

    friend bool operator==(const Reference&, const Reference&) = default;
};

// Structured view of a Drafter or Revisor reply.
struct DraftTriple {
    std::string answer;
    std::string critique;
    std::string follow_up_question;
    std::vector<Reference> references;
    int word_count = 0;

    // Quality signals; they never make a parse fail.
    bool critique_missing = false;
    bool question_missing = false;
    bool references_missing = false;
    bool references_contiguous = true;
    bool word_limit_ok = true;

    friend bool operator==(const DraftTriple&, const DraftTriple&) = default;
};

}  // namespace vra
