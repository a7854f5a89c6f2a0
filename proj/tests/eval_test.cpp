#include "vra/eval/harness.hpp"
#include "vra/eval/runner.hpp"

#include "reference_rows.hpp"
#include "pipeline_fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

using namespace vra;
using namespace vra::eval;

namespace {

std::shared_ptr<const prompts::PromptRegistry> registry()
{
    static auto const r =
        std::make_shared<const prompts::PromptRegistry>(prompts::PromptRegistry::load(VRA_TEMPLATE_DIR));
    return r;
}

std::string dataset_line(const std::string& image, const std::string& type, int i)
{
    return nlohmann::json{{"image_path", image},
                          {"question", "Question " + std::to_string(i) + "?"},
                          {"ground_truth", "answer"},
                          {"type", type}}
        .dump();
}

std::vector<EvalRecord> synthetic(int types, int per_type)
{
    std::vector<EvalRecord> out;
    for (int t = 0; t < types; ++t)
        for (int i = 0; i < per_type; ++i)
            out.push_back({std::to_string(t) + "-" + std::string(4 - std::to_string(i).size(), '0') + std::to_string(i), ImageRef::from_bytes(test::tiny_png(), MediaType::png),
                           "Q?", "A", std::string(known_types[std::size_t(t)])});
    return out;
}

}  // namespace

TEST(Dataset, FiveHundredRecords)
{
    test::TempDir dir;
    test::write_png(dir / "img" / "a.png");
    std::string text;
    for (int t = 0; t < 10; ++t)
        for (int i = 0; i < 50; ++i)
            text += dataset_line("img/a.png", std::string(known_types[std::size_t(t)]), i) + "\n";
    test::write_text(dir / "data.jsonl", text);
    auto const records = load_dataset(dir / "data.jsonl");
    ASSERT_EQ(records.size(), 500u);
    EXPECT_EQ(records[0].record_id, "000001");
    EXPECT_EQ(records[0].image, ImageRef::from_file(dir / "img" / "a.png"));
    std::map<std::string, int> per;
    for (auto const& r : records)
        ++per[r.question_type];
    EXPECT_EQ(per.size(), 10u);
    for (auto const& [_, n] : per)
        EXPECT_EQ(n, 50);
}

TEST(Dataset, MissingGroundTruthNamesLine)
{
    test::TempDir dir;
    test::write_png(dir / "a.png");
    test::write_text(dir / "d.jsonl", dataset_line("a.png", "obj_color", 1) + "\n" +
                                          R"({"image_path":"a.png","question":"Q?","type":"obj_color"})" + "\n");
    try
    {
        load_dataset(dir / "d.jsonl");
        FAIL();
    }
    catch (const SchemaError& e)
    {
        EXPECT_EQ(e.line(), 2);
        EXPECT_NE(std::string(e.what()).find("ground_truth"), std::string::npos);
    }
}

TEST(Dataset, MissingImageNamesLine)
{
    test::TempDir dir;
    test::write_png(dir / "a.png");
    test::write_text(dir / "d.jsonl", "\n" + dataset_line("a.png", "obj_color", 1) + "\n" +
                                          dataset_line("gone.png", "obj_color", 2) + "\n");
    try
    {
        load_dataset(dir / "d.jsonl");
        FAIL();
    }
    catch (const ImageRefError& e)
    {
        EXPECT_EQ(e.line(), 3);
    }
}

TEST(Dataset, EmptyFileAndOddInputs)
{
    test::TempDir dir;
    test::write_text(dir / "empty.jsonl", "");
    EXPECT_TRUE(load_dataset(dir / "empty.jsonl").empty());
    EXPECT_THROW(load_dataset(dir / "absent.jsonl"), IoError);

    test::write_png(dir / "a.png");
    test::write_text(dir / "bad.jsonl", "[1,2]\n");
    EXPECT_THROW(load_dataset(dir / "bad.jsonl"), SchemaError);

    // Unknown types are accepted, ids may be given.
    test::write_text(dir / "x.jsonl",
                     R"({"id":"q7","image_path":"a.png","question":"Q?","ground_truth":"A","type":"land_use"})"
                     "\n");
    auto const recs = load_dataset(dir / "x.jsonl");
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].record_id, "q7");
    EXPECT_EQ(recs[0].question_type, "land_use");

    test::write_text(dir / "dup.jsonl",
                     R"({"id":1,"image_path":"a.png","question":"Q?","ground_truth":"A","type":"t"})"
                     "\n"
                     R"({"id":1,"image_path":"a.png","question":"Q?","ground_truth":"A","type":"t"})"
                     "\n");
    EXPECT_THROW(load_dataset(dir / "dup.jsonl"), SchemaError);
}

TEST(Sampling, FiftyPerTypeFromTwoHundred)
{
    auto const records = synthetic(10, 200);
    auto const sample = sample_per_type(records, 50, 7);
    ASSERT_EQ(sample.size(), 500u);
    std::map<std::string, int> per;
    std::set<std::string> ids;
    for (auto const& r : sample)
    {
        ++per[r.question_type];
        ids.insert(r.record_id);
    }
    EXPECT_EQ(ids.size(), 500u);
    for (auto const& [_, n] : per)
        EXPECT_EQ(n, 50);
    EXPECT_TRUE(std::is_sorted(sample.begin(), sample.end(), [](auto const& a, auto const& b) {
        return std::tie(a.question_type, a.record_id) < std::tie(b.question_type, b.record_id);
    }));
}

TEST(Sampling, DeterministicInSeedAndInputOrder)
{
    auto records = synthetic(3, 40);
    auto const a = sample_per_type(records, 10, 42);
    auto const b = sample_per_type(records, 10, 42);
    EXPECT_EQ(a, b);
    std::shuffle(records.begin(), records.end(), std::mt19937(1));
    EXPECT_EQ(sample_per_type(records, 10, 42), a);
    EXPECT_NE(sample_per_type(records, 10, 43), a);
}

TEST(Sampling, ShortTypeTakesAll)
{
    auto records = synthetic(1, 30);
    EXPECT_EQ(sample_per_type(records, 50, 1).size(), 30u);
    EXPECT_THROW(sample_per_type(records, 0, 1), std::invalid_argument);
}

TEST(Sampling, RoughlyUniform)
{
    // Each of 20 records should be picked about half the time when drawing 10.
    auto const records = synthetic(1, 20);
    std::map<std::string, int> hits;
    for (std::uint64_t seed = 0; seed < 2000; ++seed)
        for (auto const& r : sample_per_type(records, 10, seed))
            ++hits[r.record_id];
    for (auto const& [id, n] : hits)
        EXPECT_NEAR(n, 1000, 120) << id;
}

TEST(Judge, SynonymMatches)
{
    gateway::Gateway gw(registry());
    auto const judge_backend = test::mock_backend("judge", R"({"rules":[{"role":"judge","reply":"1"}]})");
    EvalRecord rec{"r1", ImageRef::from_bytes(test::tiny_png(), MediaType::png), "Which sport?", "football",
                   "scene_type"};
    auto const v = judge(gw, rec, "soccer", judge_backend);
    EXPECT_EQ(v.verdict, parsing::Verdict::match);
    EXPECT_FALSE(v.unparseable);
}

TEST(Judge, JudgePromptCarriesAllThreeFields)
{
    std::string seen;
    gateway::GatewayOptions opts;
    opts.on_call = [&](auto const&, std::span<const gateway::ChatMessage> m, auto const&) { seen = m[0].text; };
    gateway::Gateway gw(registry(), opts);
    auto const judge_backend = test::mock_backend("judge", R"({"default":"0"})");
    EvalRecord rec{"r1", ImageRef::from_bytes(test::tiny_png(), MediaType::png), "Which sport?", "football",
                   "scene_type"};
    EXPECT_EQ(judge(gw, rec, "tennis", judge_backend).verdict, parsing::Verdict::no_match);
    EXPECT_NE(seen.find("Which sport?"), std::string::npos);
    EXPECT_NE(seen.find("football"), std::string::npos);
    EXPECT_NE(seen.find("tennis"), std::string::npos);
    EXPECT_NE(seen.find("Answer 1 for match and 0 for not match."), std::string::npos);
}

TEST(Judge, EmptyPredictionSkipsTheCall)
{
    int calls = 0;
    gateway::GatewayOptions opts;
    opts.on_call = [&](auto const&, auto, auto const&) { ++calls; };
    gateway::Gateway gw(registry(), opts);
    auto const judge_backend = test::mock_backend("judge", R"({"default":"1"})");
    EvalRecord rec{"r1", ImageRef::from_bytes(test::tiny_png(), MediaType::png), "Q?", "A", "t"};
    auto const v = judge(gw, rec, "  ", judge_backend);
    EXPECT_EQ(v.verdict, parsing::Verdict::no_match);
    EXPECT_FALSE(v.unparseable);
    EXPECT_EQ(calls, 0);
}

TEST(Judge, UnparseableAndFailedCallsScoreNoMatch)
{
    gateway::Gateway gw(registry());
    EvalRecord rec{"r1", ImageRef::from_bytes(test::tiny_png(), MediaType::png), "Q?", "A", "t"};
    auto v = judge(gw, rec, "B", test::mock_backend("judge", R"({"default":"maybe"})"));
    EXPECT_TRUE(v.unparseable);
    EXPECT_EQ(v.verdict, parsing::Verdict::no_match);
    v = judge(gw, rec, "B", test::mock_backend("judge", R"({"rules":[{"role":"judge","fail":"timeout"}]})"));
    EXPECT_TRUE(v.unparseable);
    EXPECT_EQ(v.verdict, parsing::Verdict::no_match);
}

TEST(Aggregate, GeoChatRowOverall)
{
    auto const report = aggregate(test::verdicts_for(test::geochat_acc), {});
    EXPECT_NEAR(report.overall_accuracy, test::geochat_overall, 0.005);
    EXPECT_DOUBLE_EQ(report.per_type_accuracy.at("obj_quantity"), 10.0);
    EXPECT_EQ(report.counts.at("scene_type"), 50);
    EXPECT_FALSE(report.overall_runtime.has_value());
}

TEST(Aggregate, GeoChatRuntimeOverall)
{
    auto const report = aggregate(test::verdicts_for(test::geochat_acc), test::runtimes_for(test::geochat_runtime));
    ASSERT_TRUE(report.overall_runtime.has_value());
    // The row sums to 8.85, so the exact mean 0.885 sits on the edge of the inclusive bound.
    EXPECT_LE(std::fabs(*report.overall_runtime - test::geochat_runtime_overall), 0.005 + 1e-9);
    EXPECT_NE(render_report(report, ReportFormat::csv).find(",1.24,0.89\n"), std::string::npos);
    // Equal counts per type make both runtime means agree.
    EXPECT_NEAR(*report.overall_runtime_record_mean, *report.overall_runtime, 1e-9);
    EXPECT_NEAR(report.per_type_runtime.at("scene_type"), 1.24, 1e-9);
}

TEST(Aggregate, AllMatchIsHundred)
{
    test::Row all;
    all.fill(100);
    auto const report = aggregate(test::verdicts_for(all, 5), {});
    for (auto const& [_, v] : report.per_type_accuracy)
        EXPECT_DOUBLE_EQ(v, 100.0);
    EXPECT_DOUBLE_EQ(report.overall_accuracy, 100.0);
}

TEST(Aggregate, EmptyInputThrows)
{
    EXPECT_THROW(aggregate({}, {}), EmptyInput);
}

TEST(Aggregate, OverallIsUnweightedAcrossShortTypes)
{
    std::vector<MatchVerdict> v{{"a1", "obj_color", "p", parsing::Verdict::match, false, 0},
                                {"b1", "obj_shape", "p", parsing::Verdict::no_match, false, 0},
                                {"b2", "obj_shape", "p", parsing::Verdict::match, false, 0},
                                {"b3", "obj_shape", "p", parsing::Verdict::match, false, 0},
                                {"b4", "obj_shape", "p", parsing::Verdict::match, false, 0}};
    auto const r = aggregate(v, {{"a1", "obj_color", 60}, {"b1", "obj_shape", 120}, {"b2", "obj_shape", 120},
                                 {"b3", "obj_shape", 120}, {"b4", "obj_shape", 120}});
    EXPECT_DOUBLE_EQ(r.overall_accuracy, (100.0 + 75.0) / 2);
    EXPECT_DOUBLE_EQ(*r.overall_runtime, (1.0 + 2.0) / 2);
    EXPECT_DOUBLE_EQ(*r.overall_runtime_record_mean, (1.0 + 4 * 2.0) / 5);
}

TEST(Aggregate, UnparseableTalliedAndScoredNoMatch)
{
    std::vector<MatchVerdict> v{{"a", "t", "p", parsing::Verdict::no_match, true, 0},
                                {"b", "t", "p", parsing::Verdict::match, false, 0}};
    auto const r = aggregate(v, {});
    EXPECT_DOUBLE_EQ(r.per_type_accuracy.at("t"), 50.0);
    EXPECT_EQ(r.unparseable.at("t"), 1);
}

TEST(Aggregate, FlippingOneVerdictAddsHundredOverN)
{
    std::mt19937 rng(3);
    for (int trial = 0; trial < 50; ++trial)
    {
        test::Row acc;
        for (auto& a : acc)
            a = 2.0 * std::uniform_int_distribution<int>(0, 49)(rng);
        auto verdicts = test::verdicts_for(acc);
        auto const before = aggregate(verdicts, {});
        auto it = std::find_if(verdicts.begin(), verdicts.end(),
                               [](auto const& v) { return v.verdict == parsing::Verdict::no_match; });
        ASSERT_NE(it, verdicts.end());
        it->verdict = parsing::Verdict::match;
        auto const after = aggregate(verdicts, {});
        EXPECT_NEAR(after.per_type_accuracy.at(it->question_type) - before.per_type_accuracy.at(it->question_type),
                    100.0 / 50, 1e-9);
        double mean = 0;
        for (auto const& [_, a] : after.per_type_accuracy)
            mean += a;
        EXPECT_NEAR(after.overall_accuracy, mean / 10, 0.005);
    }
}

TEST(BaselineAverage, ReproducesPublishedRow)
{
    auto const avg = baseline_average({test::report_for(test::geochat_acc), test::report_for(test::llava_acc),
                                       test::report_for(test::gemma_acc)});
    for (std::size_t t = 0; t < 10; ++t)
    {
        auto const type = std::string(known_types[t]);
        // Independent oracle: the plain mean of the three cells.
        auto const oracle = (test::geochat_acc[t] + test::llava_acc[t] + test::gemma_acc[t]) / 3.0;
        EXPECT_NEAR(avg.per_type_accuracy.at(type), oracle, 1e-9);
        EXPECT_NEAR(avg.per_type_accuracy.at(type), test::baseline_avg_row[t], 0.01) << type;
    }
    EXPECT_NEAR(avg.overall_accuracy, test::baseline_avg_row[10], 0.01);
}

TEST(BaselineAverage, IdentityAndMismatch)
{
    auto const one = test::report_for(test::geochat_acc);
    EXPECT_EQ(baseline_average({one}), one);
    auto other = one;
    other.per_type_accuracy.erase("obj_shape");
    EXPECT_THROW(baseline_average({one, other}), TypeSetMismatch);
    EXPECT_THROW(baseline_average({}), std::invalid_argument);
}

TEST(Improvement, StatedGains)
{
    auto const geo = improvement(test::report_for(test::geochat_acc), test::report_for(test::vra_geochat_acc));
    EXPECT_NEAR(geo.at("overall"), 20.40, 1e-9);
    auto const llava = improvement(test::report_for(test::llava_acc), test::report_for(test::vra_llava_acc));
    EXPECT_NEAR(llava.at("overall"), 14.20, 1e-9);
    EXPECT_NEAR(llava.at("obj_position"), 46.0, 1e-9);
    auto const gemma_rows = improvement(test::report_for(test::gemma_acc), test::report_for(test::vra_gemma_acc));
    EXPECT_NEAR(gemma_rows.at("overall"), 10.20, 1e-9);
    auto const gemma_headline = improvement(RunReport::overall_only(test::gemma_overall),
                                            RunReport::overall_only(test::vra_gemma_headline));
    EXPECT_NEAR(gemma_headline.at("overall"), 15.60, 1e-9);
    EXPECT_EQ(gemma_headline.size(), 1u);
}

TEST(Improvement, SelfIsZeroAndMismatchThrows)
{
    auto const r = test::report_for(test::llava_acc);
    for (auto const& [_, d] : improvement(r, r))
        EXPECT_EQ(d, 0.0);
    EXPECT_THROW(improvement(r, RunReport::overall_only(57.6)), TypeSetMismatch);
}

TEST(Report, CsvRowEndsWithOverall)
{
    auto const report = aggregate(test::verdicts_for(test::geochat_acc), test::runtimes_for(test::geochat_runtime));
    auto const csv = render_report(report, ReportFormat::csv);
    EXPECT_TRUE(csv.starts_with("metric,obj_quantity,obj_position,obj_direction,obj_size,reasoning,obj_color,"
                                "obj_existence,obj_category,obj_shape,scene_type,overall\n"));
    EXPECT_NE(csv.find("accuracy,10.00,68.00,34.00,22.00,60.00,24.00,84.00,76.00,34.00,52.00,46.40\n"),
              std::string::npos);
    EXPECT_NE(csv.find("runtime_min,0.79,0.83,0.79,0.81,1.05,0.84,0.81,0.91,0.78,1.24,0.89\n"), std::string::npos);
    EXPECT_NE(csv.find("n,50,50,50,50,50,50,50,50,50,50,500\n"), std::string::npos);
}

TEST(Report, ExtraTypeGoesBeforeOverall)
{
    std::vector<MatchVerdict> v{{"a", "zebra_count", "p", parsing::Verdict::match, false, 0},
                                {"b", "scene_type", "p", parsing::Verdict::match, false, 0},
                                {"c", "apron_use", "p", parsing::Verdict::match, false, 0},
                                {"d", "obj_quantity", "p", parsing::Verdict::match, false, 0}};
    auto const csv = render_report(aggregate(v, {}), ReportFormat::csv);
    EXPECT_TRUE(csv.starts_with("metric,obj_quantity,scene_type,apron_use,zebra_count,overall\n"));
}

TEST(Report, StructuredRoundTrips)
{
    auto const report = aggregate(test::verdicts_for(test::geochat_acc), test::runtimes_for(test::geochat_runtime));
    EXPECT_EQ(parse_structured_report(render_report(report, ReportFormat::structured)), report);
    auto const bare = RunReport::overall_only(52.8);
    EXPECT_EQ(parse_structured_report(render_report(bare, ReportFormat::structured)), bare);
    EXPECT_THROW(parse_structured_report("{}"), SchemaError);
}

TEST(Report, TextTableLayout)
{
    auto const report = aggregate(test::verdicts_for(test::geochat_acc), {});
    auto const table = render_report(report, ReportFormat::table_text);
    auto const first = table.substr(0, table.find('\n'));
    EXPECT_LT(first.find("obj_quantity"), first.find("scene_type"));
    EXPECT_LT(first.find("scene_type"), first.find("overall"));
    EXPECT_NE(table.find("46.40"), std::string::npos);
    EXPECT_NE(table.find("runtime_min"), std::string::npos);
}

TEST(Report, EmitWritesFileAndReportsIoErrors)
{
    test::TempDir dir;
    auto const report = test::report_for(test::llava_acc);
    emit_report(report, ReportFormat::csv, dir / "r.csv");
    EXPECT_EQ(test::read_text(dir / "r.csv"), render_report(report, ReportFormat::csv));
    EXPECT_THROW(emit_report(report, ReportFormat::csv, dir / "missing" / "r.csv"), IoError);
}

TEST(Logs, RoundTripAndTruncatedTail)
{
    test::TempDir dir;
    MatchVerdict const v{"r1", "obj_color", "red \"bright\"\nline", parsing::Verdict::match, false, 0.25};
    RuntimeRecord const rt{"r1", "obj_color", 12.5};
    EXPECT_EQ(verdict_from_json(to_json_line(v), 1), v);
    EXPECT_EQ(runtime_from_json(to_json_line(rt), 1), rt);

    auto const good = to_json_line(v) + "\n";
    auto const cut = to_json_line(MatchVerdict{"r2", "obj_color", "x", parsing::Verdict::no_match, false, 0});
    test::write_text(dir / "v.jsonl", good + cut.substr(0, cut.size() / 2));
    EXPECT_EQ(read_verdicts(dir / "v.jsonl"), std::vector<MatchVerdict>{v});

    test::write_text(dir / "bad.jsonl", "{oops}\n" + good);
    EXPECT_THROW(read_verdicts(dir / "bad.jsonl"), SchemaError);
    EXPECT_TRUE(read_runtimes(dir / "none.jsonl").empty());
}

TEST(Runner, EvaluatesEveryRecordOnceAcrossThreads)
{
    gateway::Gateway gw(registry());
    SystemClock clock;
    orchestrator::Pipeline pipeline(gw, clock);
    auto cfg = test::mock_pipeline(2, 1);
    cfg.judge = test::mock_backend("judge", R"({"default":"1"})");
    auto const records = synthetic(2, 6);

    std::multiset<std::string> seen;
    RunOptions opts;
    opts.concurrency = 4;
    opts.on_record = [&](const RecordOutcome& o) {
        seen.insert(o.record.record_id);
        EXPECT_EQ(o.verdict.record_id, o.record.record_id);
        EXPECT_EQ(o.result.final_answer, "FINAL");
        EXPECT_GE(o.runtime.runtime_s, 0.0);
    };
    evaluate(records, pipeline, cfg, gw, opts);
    EXPECT_EQ(seen.size(), records.size());
    EXPECT_EQ(std::set<std::string>(seen.begin(), seen.end()).size(), records.size());
}

TEST(Runner, StopsOnPipelineFailureKeepingFinishedRecords)
{
    gateway::Gateway gw(registry());
    SystemClock clock;
    orchestrator::Pipeline pipeline(gw, clock);
    auto cfg = test::mock_pipeline(1, 1);
    cfg.judge = test::mock_backend("judge", R"({"default":"1"})");
    // The spokesman fails only for the third record's question.
    cfg.backbone = test::mock_backend(
        "backbone", R"({"rules":[{"role":"drafter","reply":"A. Is it?"},{"role":"revisor","reply":"B. Is it?"},
                                 {"role":"spokesman","reply":"ok"},
                                 {"role":"spokesman","question":"Q3?","fail":"status:500"}]})");
    std::vector<EvalRecord> records;
    for (int i = 1; i <= 5; ++i)
        records.push_back({"r" + std::to_string(i), ImageRef::from_bytes(test::tiny_png(), MediaType::png),
                           "Q" + std::to_string(i) + "?", "A", "obj_color"});
    std::vector<std::string> done;
    RunOptions opts;
    opts.on_record = [&](const RecordOutcome& o) { done.push_back(o.record.record_id); };
    EXPECT_THROW(evaluate(records, pipeline, cfg, gw, opts), orchestrator::PhaseError);
    EXPECT_EQ(done, (std::vector<std::string>{"r1", "r2"}));
}
