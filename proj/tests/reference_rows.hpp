#pragma once

#include "vra/eval/harness.hpp"

#include <array>
#include <string>
#include <vector>

namespace vra::test {

using Row = std::array<double, 10>;  // eval::known_types order

// Per-type accuracy rows (percent, 50 questions per type).
inline constexpr Row geochat_acc{10, 68, 34, 22, 60, 24, 84, 76, 34, 52};
inline constexpr Row vra_geochat_acc{52, 76, 70, 74, 86, 50, 78, 70, 62, 50};
inline constexpr Row llava_acc{30, 42, 36, 60, 56, 68, 78, 74, 60, 72};
inline constexpr Row vra_llava_acc{48, 88, 72, 72, 72, 80, 70, 74, 62, 80};
inline constexpr Row gemma_acc{10, 40, 48, 60, 66, 78, 62, 48, 60, 72};
inline constexpr Row vra_gemma_acc{62, 72, 66, 74, 76, 74, 42, 52, 56, 72};

// Stated overalls for the rows above.
inline constexpr double geochat_overall = 46.40, vra_geochat_overall = 66.80;
inline constexpr double llava_overall = 57.60, vra_llava_overall = 71.80;
inline constexpr double gemma_overall = 54.40, vra_gemma_overall = 64.60;
// The stated headline overall for the Gemma 3 variant, which disagrees with its row.
inline constexpr double vra_gemma_headline = 70.00;

// Baseline average row, last cell overall.
inline constexpr std::array<double, 11> baseline_avg_row{16.67, 50.00, 39.33, 47.33, 60.67, 56.67,
                                                          74.67, 66.00, 51.33, 65.33, 52.80};

// Per-type runtime in minutes and its stated overall.
inline constexpr Row geochat_runtime{0.79, 0.83, 0.79, 0.81, 1.05, 0.84, 0.81, 0.91, 0.78, 1.24};
inline constexpr double geochat_runtime_overall = 0.89;

// Verdicts reproducing an accuracy row with n records per type, plus
// runtimes giving each type the matching runtime cell when provided.
inline std::vector<eval::MatchVerdict> verdicts_for(const Row& acc, int n = 50, const std::string& prefix = "r")
{
    std::vector<eval::MatchVerdict> out;
    for (std::size_t t = 0; t < acc.size(); ++t)
    {
        auto const matches = static_cast<int>(acc[t] * n / 100.0 + 0.5);
        for (int i = 0; i < n; ++i)
            out.push_back({prefix + std::to_string(t) + "-" + std::to_string(i), std::string(eval::known_types[t]),
                           "p", i < matches ? parsing::Verdict::match : parsing::Verdict::no_match, false, 0.0});
    }
    return out;
}

inline std::vector<eval::RuntimeRecord> runtimes_for(const Row& minutes, int n = 50, const std::string& prefix = "r")
{
    std::vector<eval::RuntimeRecord> out;
    for (std::size_t t = 0; t < minutes.size(); ++t)
        for (int i = 0; i < n; ++i)
            out.push_back({prefix + std::to_string(t) + "-" + std::to_string(i), std::string(eval::known_types[t]),
                           minutes[t] * 60.0});
    return out;
}

inline eval::RunReport report_for(const Row& acc)
{
    std::map<std::string, double> cells;
    for (std::size_t t = 0; t < acc.size(); ++t)
        cells[std::string(eval::known_types[t])] = acc[t];
    return eval::RunReport::from_accuracy(cells);
}

}  // namespace vra::test
