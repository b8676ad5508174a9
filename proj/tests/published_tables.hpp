#pragma once

// Published confusion matrices (HMM1 and HMM2), transcribed as counts per
// 100 test utterances of each portrayed condition. Rows are evaluated-as,
// columns portrayed-as; every column sums to 100, and the diagonal is the
// average identification rate of the corresponding performance table.

#include <string>
#include <vector>

#include "hmm2/classifier.hpp"

namespace published {

inline const std::vector<std::string> kConditions{"neutral", "shouted", "loud", "angry", "happy", "fear"};

inline constexpr int kHmm1Confusion[6][6] = {
    {99, 2, 1, 3, 1, 4},   {0, 30, 7, 28, 10, 7},  {1, 34, 54, 17, 25, 17},
    {0, 31, 15, 38, 0, 15}, {0, 0, 16, 4, 59, 8},  {0, 3, 7, 10, 5, 49},
};

inline constexpr int kHmm2Confusion[6][6] = {
    {99, 2, 1, 3, 1, 4},   {0, 38, 8, 25, 8, 6},   {1, 29, 60, 12, 22, 14},
    {0, 28, 12, 46, 0, 13}, {0, 0, 13, 4, 64, 8},  {0, 3, 6, 10, 5, 55},
};

// Average identification rates of the two performance tables.
inline constexpr double kHmm1Average[6] = {99, 30, 54, 38, 59, 49};
inline constexpr double kHmm2Average[6] = {99, 38, 60, 46, 64, 55};

inline hmm2::EvaluationReport report_from_counts(const int (&counts)[6][6], int order) {
  hmm2::EvaluationReport report(kConditions);
  for (std::size_t p = 0; p < 6; ++p)
    for (std::size_t t = 0; t < 6; ++t) report.confusion.add(p, t, static_cast<std::size_t>(counts[p][t]));
  report.protocol.order = order;
  report.protocol.states = 5;
  report.protocol.mixtures = 5;
  report.protocol.topology = "left-right";
  return report;
}

inline hmm2::EvaluationReport hmm1_report() { return report_from_counts(kHmm1Confusion, 1); }
inline hmm2::EvaluationReport hmm2_report() { return report_from_counts(kHmm2Confusion, 2); }

}  // namespace published
