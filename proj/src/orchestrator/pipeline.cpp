#include "vra/orchestrator/pipeline.hpp"

#include "vra/parsing/parsing.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <stdexcept>

namespace vra::orchestrator {

using gateway::BackendKind;
using gateway::ChatMessage;
using gateway::MessageRole;
using prompts::TemplateId;

std::string_view to_string(ContextPolicy policy)
{
    return policy == ContextPolicy::full_transcript ? "full_transcript" : "last_round";
}

std::string_view to_string(InquirerMode mode)
{
    return mode == InquirerMode::extract ? "extract" : "model";
}

std::string_view to_string(Phase phase)
{
    switch (phase)
    {
    case Phase::captioner: return "captioner";
    case Phase::drafter: return "drafter";
    case Phase::inquirer: return "inquirer";
    case Phase::vision_suite: return "vision_suite";
    case Phase::revisor: return "revisor";
    case Phase::spokesman: return "spokesman";
    }
    return "unknown";
}

std::optional<ContextPolicy> context_policy_from_string(std::string_view name)
{
    for (auto p : {ContextPolicy::full_transcript, ContextPolicy::last_round})
        if (to_string(p) == name)
            return p;
    return std::nullopt;
}

std::optional<InquirerMode> inquirer_mode_from_string(std::string_view name)
{
    for (auto m : {InquirerMode::extract, InquirerMode::model})
        if (to_string(m) == name)
            return m;
    return std::nullopt;
}

void validate(const PipelineConfig& cfg)
{
    if (cfg.iterations < 1)
        throw std::invalid_argument("iterations must be at least 1");
    if (cfg.suite.empty())
        throw std::invalid_argument("the vision suite is empty");
    gateway::validate(cfg.backbone);
    if (cfg.backbone.kind == BackendKind::chat_vision)
        throw std::invalid_argument("the backbone must be a text backend");
    gateway::validate(cfg.captioner);
    if (cfg.captioner.kind == BackendKind::chat_text)
        throw std::invalid_argument("the captioner must be a vision backend");
    for (auto const& b : cfg.suite)
    {
        gateway::validate(b);
        if (b.kind == BackendKind::chat_text)
            throw std::invalid_argument(fmt::format("suite backend '{}' is not a vision backend", b.backend_id));
    }
    if (cfg.judge)
        gateway::validate(*cfg.judge);
}

std::size_t expected_turn_count(const PipelineConfig& cfg)
{
    return 2 + static_cast<std::size_t>(cfg.iterations) * (cfg.suite.size() + 2) + 1;
}

PhaseError::PhaseError(Phase phase, int iteration, std::string cause_kind, const std::string& message,
                       ConversationMemory memory)
    : Error(message), phase_(phase), iteration_(iteration), cause_kind_(std::move(cause_kind)),
      memory_(std::move(memory))
{
}

std::string render_transcript(std::span<const ChatMessage> messages)
{
    std::string out;
    for (auto const& m : messages)
    {
        if (!out.empty())
            out += "\n\n";
        out += fmt::format("[{}]\n", to_string(m.role));
        if (m.image)
        {
            auto const slot = std::min(m.image_slot, m.text.size());
            out += m.text.substr(0, slot);
            out += slot == 0 && !m.text.empty() ? "<image> " : "<image>";
            out += m.text.substr(slot);
        }
        else
            out += m.text;
    }
    return out;
}

namespace {

ChatMessage text_message(MessageRole role, std::string text)
{
    return {role, std::move(text), std::nullopt, 0};
}

int count_role(const ConversationMemory& memory, Role role)
{
    auto const turns = memory.turns();
    return static_cast<int>(std::count_if(turns.begin(), turns.end(), [&](auto const& t) { return t.role == role; }));
}

std::vector<const AgentTurn*> turns_of(const ConversationMemory& memory, Role role, int iteration)
{
    std::vector<const AgentTurn*> out;
    for (auto const& t : memory.turns())
        if (t.role == role && t.iteration == iteration)
            out.push_back(&t);
    return out;
}

// Drafter or Revisor output the next Inquirer reads from.
const AgentTurn& latest_answer_turn(const ConversationMemory& memory)
{
    auto const turns = memory.turns();
    for (auto it = turns.rbegin(); it != turns.rend(); ++it)
        if (it->role == Role::drafter || it->role == Role::revisor)
            return *it;
    throw MissingContext("no drafter or revisor turn to work from");
}

const AgentTurn& require(const ConversationMemory& memory, Role role, Phase phase)
{
    if (auto const* t = latest_turn(memory, role))
        return *t;
    throw MissingContext(fmt::format("{} phase needs a {} turn first", to_string(phase), to_string(role)));
}

std::string evidence_block(const std::string& question, const std::vector<const AgentTurn*>& evidence)
{
    auto out = fmt::format("Question to vision models: {}", question);
    for (std::size_t k = 0; k < evidence.size(); ++k)
        out += fmt::format("\n\nTool output [{}] ({}): {}", k + 1, evidence[k]->backend_id, evidence[k]->response_raw);
    return out;
}

struct PhaseOutcome {
    std::vector<AgentTurn> turns;
    double latency_s = 0.0;
};

class Runner {
public:
    Runner(const gateway::Gateway& gw, const Clock& clock, const PipelineConfig& cfg)
        : gw_(gw), clock_(clock), cfg_(cfg), registry_(gw.registry())
    {
    }

    PhaseOutcome run(ConversationMemory& memory, Phase phase)
    {
        switch (phase)
        {
        case Phase::captioner: return captioner(memory);
        case Phase::drafter: return drafter(memory);
        case Phase::inquirer: return inquirer(memory);
        case Phase::vision_suite: return suite(memory);
        case Phase::revisor: return revisor(memory);
        case Phase::spokesman: return spokesman(memory);
        }
        throw std::invalid_argument("unknown phase");
    }

private:
    PhaseOutcome captioner(ConversationMemory& memory)
    {
        auto const prompt = registry_.render(TemplateId::captioner_user, {{"image", ""}});
        ChatMessage const msg{MessageRole::user, prompt.user_text, memory.task().image, prompt.image_slot.value_or(0)};
        auto const started = clock_.now();
        auto const reply = gw_.image_query(cfg_.captioner, memory.task().image, prompt,
                                           {Role::captioner, 0, memory.task().question});
        return single(memory, Role::captioner, cfg_.captioner.backend_id, render_transcript({&msg, 1}), reply.text,
                      started, 0, reply.latency_s);
    }

    PhaseOutcome drafter(ConversationMemory& memory)
    {
        require(memory, Role::captioner, Phase::drafter);
        std::vector<ChatMessage> messages;
        messages.push_back(system_message(TemplateId::drafter_system));
        append_opening(messages, memory);
        messages.push_back(text_message(MessageRole::user, user_line(TemplateId::drafter_user)));
        return backbone_call(memory, Role::drafter, messages, 0, 0);
    }

    PhaseOutcome inquirer(ConversationMemory& memory)
    {
        require(memory, Role::drafter, Phase::inquirer);
        auto const iteration = count_role(memory, Role::revisor) + 1;
        if (!turns_of(memory, Role::inquirer, iteration).empty())
            throw MissingContext(fmt::format("iteration {} already has an inquirer turn", iteration));
        auto const& source = latest_answer_turn(memory);
        auto const instruction = user_line(TemplateId::inquirer_user);

        if (cfg_.inquirer == InquirerMode::extract)
        {
            auto const started = clock_.now();
            auto question = parsing::find_question(parsing::strip_reasoning(source.response_raw));
            if (!question)
            {
                spdlog::warn("task {}: no question in the latest {} reply, forwarding the user question",
                             memory.task().task_id, to_string(source.role));
                question = memory.task().question;
            }
            std::vector<ChatMessage> const shown{text_message(MessageRole::assistant, source.response_raw),
                                                 text_message(MessageRole::user, instruction)};
            return single(memory, Role::inquirer, "local", render_transcript(shown), *question, started, iteration,
                          0.0);
        }

        std::vector<ChatMessage> messages{
            text_message(MessageRole::user, fmt::format("User question: {}", memory.task().question)),
            text_message(MessageRole::assistant, parsing::strip_reasoning(source.response_raw)),
            text_message(MessageRole::user, instruction),
        };
        auto const started = clock_.now();
        auto const reply = gw_.chat_with_question_tool(cfg_.backbone, messages,
                                                       {Role::inquirer, iteration - 1, memory.task().question});
        auto raw = reply.tool_question ? nlohmann::json{{"question", *reply.tool_question}}.dump() : reply.text;
        return single(memory, Role::inquirer, cfg_.backbone.backend_id, render_transcript(messages), std::move(raw),
                      started, iteration, reply.latency_s);
    }

    PhaseOutcome suite(ConversationMemory& memory)
    {
        auto const iteration = count_role(memory, Role::revisor) + 1;
        auto const pending = turns_of(memory, Role::inquirer, iteration);
        if (pending.empty())
            throw MissingContext(fmt::format("vision_suite phase needs the iteration {} inquirer turn", iteration));
        if (!turns_of(memory, Role::vision_suite, iteration).empty())
            throw MissingContext(fmt::format("iteration {} already has suite evidence", iteration));
        auto const question = Pipeline::forwarded_question(*pending.back(), memory.task());

        auto const prompt = registry_.render(TemplateId::vision_user, {{"image", ""}, {"inquirer_question", question}});
        ChatMessage const msg{MessageRole::user, prompt.user_text, memory.task().image, prompt.image_slot.value_or(0)};
        auto const shown = render_transcript({&msg, 1});

        auto const started = clock_.now();
        auto const wall_start = std::chrono::steady_clock::now();
        auto const evidence =
            gw_.fan_out(cfg_.suite, memory.task().image, question, {Role::vision_suite, iteration - 1, question});
        PhaseOutcome out;
        out.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

        // Slots are joined together, so every suite turn ends at the join;
        // config order keeps the transcript and citations stable.
        for (auto const& ev : evidence)
        {
            if (!ev.ok())
                spdlog::warn("task {}: {}", memory.task().task_id, std::get<gateway::FailureRecord>(ev.reply).message);
            AgentTurn turn{Role::vision_suite, ev.backend_id, shown, ev.text(), started, clock_.now(), iteration};
            memory.append(turn);
            out.turns.push_back(std::move(turn));
        }
        return out;
    }

    PhaseOutcome revisor(ConversationMemory& memory)
    {
        auto const iteration = count_role(memory, Role::revisor) + 1;
        if (turns_of(memory, Role::vision_suite, iteration).empty())
            throw MissingContext(fmt::format("revisor phase needs iteration {} suite evidence", iteration));

        std::vector<ChatMessage> messages;
        messages.push_back(system_message(TemplateId::revisor_system));
        append_opening(messages, memory);
        if (cfg_.context == ContextPolicy::full_transcript)
        {
            messages.push_back(assistant_turn(require(memory, Role::drafter, Phase::revisor)));
            for (int i = 1; i <= iteration; ++i)
            {
                messages.push_back(evidence_message(memory, i));
                if (auto const rev = turns_of(memory, Role::revisor, i); !rev.empty())
                    messages.push_back(assistant_turn(*rev.back()));
            }
        }
        else
        {
            messages.push_back(assistant_turn(latest_answer_turn(memory)));
            messages.push_back(evidence_message(memory, iteration));
        }
        messages.push_back(text_message(MessageRole::user, user_line(TemplateId::revisor_user)));
        return backbone_call(memory, Role::revisor, messages, iteration, iteration - 1);
    }

    PhaseOutcome spokesman(ConversationMemory& memory)
    {
        auto const& last = require(memory, Role::revisor, Phase::spokesman);
        std::vector<ChatMessage> messages{
            system_message(TemplateId::spokesman_system),
            text_message(MessageRole::user, fmt::format("User question: {}", memory.task().question)),
            assistant_turn(last),
            text_message(MessageRole::user, user_line(TemplateId::spokesman_user)),
        };
        return backbone_call(memory, Role::spokesman, messages, count_role(memory, Role::revisor) + 1, 0);
    }

    ChatMessage system_message(TemplateId id) const
    {
        auto const p = registry_.render(id, {{"time", format_prompt_time(clock_.now())}});
        return text_message(MessageRole::system, *p.system_text);
    }

    std::string user_line(TemplateId id) const { return registry_.render(id, {}).user_text; }

    static ChatMessage assistant_turn(const AgentTurn& turn)
    {
        return text_message(MessageRole::assistant, parsing::strip_reasoning(turn.response_raw));
    }

    static void append_opening(std::vector<ChatMessage>& messages, const ConversationMemory& memory)
    {
        messages.push_back(text_message(MessageRole::user, fmt::format("User question: {}", memory.task().question)));
        messages.push_back(text_message(MessageRole::assistant,
                                        fmt::format("Image caption: {}", latest_response(memory, Role::captioner))));
    }

    static ChatMessage evidence_message(const ConversationMemory& memory, int iteration)
    {
        auto const inq = turns_of(memory, Role::inquirer, iteration);
        auto const question = inq.empty() ? std::string{} : Pipeline::forwarded_question(*inq.back(), memory.task());
        return text_message(MessageRole::user, evidence_block(question, turns_of(memory, Role::vision_suite, iteration)));
    }

    PhaseOutcome backbone_call(ConversationMemory& memory, Role role, const std::vector<ChatMessage>& messages,
                               int iteration, int ordinal)
    {
        auto const started = clock_.now();
        auto const reply = gw_.chat(cfg_.backbone, messages, {role, ordinal, memory.task().question});
        if (reply.truncated)
            spdlog::warn("task {}: {} reply was cut at max_tokens", memory.task().task_id, to_string(role));
        return single(memory, role, cfg_.backbone.backend_id, render_transcript(messages), reply.text, started,
                      iteration, reply.latency_s);
    }

    PhaseOutcome single(ConversationMemory& memory, Role role, std::string backend_id, std::string prompt,
                        std::string response, Timestamp started, int iteration, double latency_s)
    {
        AgentTurn turn{role, std::move(backend_id), std::move(prompt), std::move(response), started, clock_.now(),
                       iteration};
        memory.append(turn);
        return {{std::move(turn)}, latency_s};
    }

    const gateway::Gateway& gw_;
    const Clock& clock_;
    const PipelineConfig& cfg_;
    const prompts::PromptRegistry& registry_;
};

DraftTriple parse_answer_turn(const AgentTurn& turn)
{
    auto const text = parsing::strip_reasoning(turn.response_raw);
    if (turn.role == Role::revisor)
        return parsing::parse_revision(text);
    try
    {
        return parsing::parse_draft(text);
    }
    catch (const parsing::NoQuestionFound&)
    {
        return parsing::parse_revision(text);
    }
}

}  // namespace

std::string Pipeline::forwarded_question(const AgentTurn& inquirer_turn, const VqaTask& task)
{
    if (inquirer_turn.backend_id == "local")
        return inquirer_turn.response_raw;
    auto const parsed = nlohmann::json::parse(inquirer_turn.response_raw, nullptr, false);
    if (parsed.is_object() && parsed.contains("question") && parsed["question"].is_string())
        return parsed["question"].get<std::string>();
    return parsing::find_question(parsing::strip_reasoning(inquirer_turn.response_raw)).value_or(task.question);
}

std::vector<AgentTurn> Pipeline::run_phase(ConversationMemory& memory, Phase phase, const PipelineConfig& cfg) const
{
    return Runner(gateway_, clock_, cfg).run(memory, phase).turns;
}

PipelineResult Pipeline::run_task(const VqaTask& task, const PipelineConfig& cfg) const
{
    validate(task);
    validate(cfg);
    (void)task.image.load();

    PipelineResult result{{}, ConversationMemory(task), {}, 0, {}};
    Runner runner(gateway_, clock_, cfg);

    auto step = [&](Phase phase, int iteration) {
        try
        {
            auto const outcome = runner.run(result.memory, phase);
            result.per_phase_latency[std::string(to_string(phase))] += outcome.latency_s;
            for (auto const& turn : outcome.turns)
                if (turn.role == Role::drafter || turn.role == Role::revisor)
                    result.drafts.push_back(parse_answer_turn(turn));
        }
        catch (const gateway::GatewayError& e)
        {
            throw PhaseError(phase, iteration, e.kind(),
                             fmt::format("{} phase (iteration {}) failed: {}", to_string(phase), iteration, e.what()),
                             result.memory);
        }
    };

    step(Phase::captioner, 0);
    step(Phase::drafter, 0);
    for (int i = 1; i <= cfg.iterations; ++i)
    {
        step(Phase::inquirer, i);
        step(Phase::vision_suite, i);
        step(Phase::revisor, i);
        ++result.iterations_run;
    }
    step(Phase::spokesman, cfg.iterations + 1);

    result.final_answer = parsing::strip_reasoning(latest_response(result.memory, Role::spokesman));
    return result;
}

}  // namespace vra::orchestrator
