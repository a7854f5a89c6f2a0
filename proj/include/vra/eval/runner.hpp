#pragma once

#include "vra/eval/harness.hpp"
#include "vra/orchestrator/pipeline.hpp"

#include <functional>

namespace vra::eval {

struct RecordOutcome {
    const EvalRecord& record;
    const orchestrator::PipelineResult& result;
    MatchVerdict verdict;
    RuntimeRecord runtime;
};

struct RunOptions {
    int concurrency = 1;
    // Called once per finished record, never concurrently.
    std::function<void(const RecordOutcome&)> on_record;
};

// Runs the pipeline and the judge on every record, up to `concurrency` at
// a time. Runtime is pipeline start to Spokesman reply on the pipeline's
// clock, judge excluded. On the first failure no new records start; the
// ones in flight finish and are reported, then the failure is rethrown.
void evaluate(const std::vector<EvalRecord>& records, const orchestrator::Pipeline& pipeline,
              const orchestrator::PipelineConfig& cfg, const gateway::Gateway& gateway, const RunOptions& options);

}  // namespace vra::eval
