#pragma once

#include "vra/core/clock.hpp"
#include "vra/core/memory.hpp"
#include "vra/gateway/gateway.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vra::orchestrator {

enum class ContextPolicy { full_transcript, last_round };
enum class InquirerMode { extract, model };
enum class Phase { captioner, drafter, inquirer, vision_suite, revisor, spokesman };

std::string_view to_string(ContextPolicy policy);
std::string_view to_string(InquirerMode mode);
std::string_view to_string(Phase phase);
std::optional<ContextPolicy> context_policy_from_string(std::string_view name);
std::optional<InquirerMode> inquirer_mode_from_string(std::string_view name);

struct PipelineConfig {
    gateway::BackendConfig backbone;
    std::vector<gateway::BackendConfig> suite;
    gateway::BackendConfig captioner;
    std::optional<gateway::BackendConfig> judge;
    int iterations = 3;
    // Applies to the Revisor; the Drafter and Spokesman always see fixed context.
    ContextPolicy context = ContextPolicy::full_transcript;
    InquirerMode inquirer = InquirerMode::extract;
};

// Throws std::invalid_argument on a broken invariant.
void validate(const PipelineConfig& cfg);

// 2 + K * (|suite| + 2) + 1
std::size_t expected_turn_count(const PipelineConfig& cfg);

struct PipelineResult {
    std::string final_answer;
    ConversationMemory memory;
    // Summed over iterations, keyed by phase name.
    std::map<std::string, double> per_phase_latency;
    int iterations_run = 0;
    // Parsed draft followed by one parsed revision per iteration.
    std::vector<DraftTriple> drafts;
};

class MissingContext : public Error {
public:
    using Error::Error;
};

// A backend failure with the phase it happened in. Carries the transcript
// up to the failure so it can still be audited.
class PhaseError : public Error {
public:
    PhaseError(Phase phase, int iteration, std::string cause_kind, const std::string& message,
               ConversationMemory memory);

    Phase phase() const { return phase_; }
    int iteration() const { return iteration_; }
    const std::string& cause_kind() const { return cause_kind_; }
    const ConversationMemory& memory() const { return memory_; }

private:
    Phase phase_;
    int iteration_;
    std::string cause_kind_;
    ConversationMemory memory_;
};

// The Captioner, Drafter, Inquirer/Suite/Revisor loop and Spokesman over
// one shared transcript. Stateless between tasks; run_task may be called
// from several threads at once.
class Pipeline {
public:
    Pipeline(const gateway::Gateway& gateway, const Clock& clock) : gateway_(gateway), clock_(clock) {}

    // Throws ImageDecodeError for an unreadable image, PhaseError when a
    // backend call fails.
    PipelineResult run_task(const VqaTask& task, const PipelineConfig& cfg) const;

    // Runs one phase against the memory and returns the turns it appended:
    // one for every phase except vision_suite, which appends one per suite
    // backend. The iteration is inferred from the memory. Throws
    // MissingContext when an earlier turn the phase needs is absent.
    std::vector<AgentTurn> run_phase(ConversationMemory& memory, Phase phase, const PipelineConfig& cfg) const;

    // The question the Inquirer forwarded in the given turn.
    static std::string forwarded_question(const AgentTurn& inquirer_turn, const VqaTask& task);

private:
    const gateway::Gateway& gateway_;
    const Clock& clock_;
};

// Human-readable rendering of a message list for the audit trail. Images
// appear as "<image>" at their slot, never as payload.
std::string render_transcript(std::span<const gateway::ChatMessage> messages);

}  // namespace vra::orchestrator
