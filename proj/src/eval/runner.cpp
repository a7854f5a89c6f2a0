#include "vra/eval/runner.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace vra::eval {

void evaluate(const std::vector<EvalRecord>& records, const orchestrator::Pipeline& pipeline,
              const orchestrator::PipelineConfig& cfg, const gateway::Gateway& gateway, const RunOptions& options)
{
    if (options.concurrency < 1)
        throw std::invalid_argument("concurrency must be at least 1");
    if (!cfg.judge)
        throw std::invalid_argument("evaluation needs a judge backend");

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex mu;
    std::exception_ptr failure;

    auto worker = [&] {
        for (;;)
        {
            if (stop)
                return;
            auto const i = next++;
            if (i >= records.size())
                return;
            auto const& record = records[i];
            try
            {
                auto const result = pipeline.run_task(to_task(record), cfg);
                auto const turns = result.memory.turns();
                RuntimeRecord runtime{record.record_id, record.question_type,
                                      seconds_between(turns.front().started_at, turns.back().ended_at)};
                auto verdict = judge(gateway, record, result.final_answer, *cfg.judge);
                std::lock_guard lock(mu);
                if (options.on_record)
                    options.on_record(RecordOutcome{record, result, std::move(verdict), std::move(runtime)});
            }
            catch (...)
            {
                std::lock_guard lock(mu);
                if (!failure)
                    failure = std::current_exception();
                stop = true;
                return;
            }
        }
    };

    auto const n = std::min<std::size_t>(std::size_t(options.concurrency), records.size());
    if (n <= 1)
        worker();
    else
    {
        std::vector<std::jthread> threads;
        for (std::size_t t = 0; t < n; ++t)
            threads.emplace_back(worker);
    }
    if (failure)
        std::rethrow_exception(failure);
}

}  // namespace vra::eval
