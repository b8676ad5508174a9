#include <doctest.h>

#include <cmath>
#include <vector>

#include <json.hpp>

#include "hmm2/classifier.hpp"
#include "hmm2/error.hpp"
#include "hmm2/feature_io.hpp"
#include "hmm2/sampling.hpp"
#include "oracles.hpp"
#include "published_tables.hpp"

using namespace hmm2;

namespace {

// A bank of single-state, single-component models centered at the given
// 1-D means. Second-order, so every sequence needs T >= 2.
ConditionBank point_bank(const std::vector<std::string>& labels, const std::vector<double>& means) {
  std::vector<AnyModel> models;
  for (double mu : means) {
    Hmm2Model m;
    m.initial = {1.0};
    m.first_step = {1.0};
    m.transitions = {1.0};
    GaussianMixture g(1, 1);
    g.weights = {1.0};
    g.means = {mu};
    g.variances = {1.0};
    m.states = {g};
    models.emplace_back(m);
  }
  return ConditionBank(labels, models);
}

FeatureSequence constant(double v, std::size_t frames = 4) {
  FeatureSequence seq(frames, 1);
  for (std::size_t t = 0; t < frames; ++t) seq(t, 0) = v;
  return seq;
}

}  // namespace

TEST_CASE("identify picks the best-scoring model") {
  const auto bank = point_bank({"neutral", "angry", "fear"}, {0.0, 5.0, -5.0});
  CHECK(identify(bank, constant(4.5)).label == "angry");
  CHECK(identify(bank, constant(-4.0)).label == "fear");
  const auto r = identify(bank, constant(0.1), Scoring::kViterbi);
  CHECK(r.label == "neutral");
  CHECK(r.predicted == 0);
  CHECK(r.scores.size() == 3);
}

TEST_CASE("identify breaks ties toward the earlier label") {
  const auto bank = point_bank({"b", "a"}, {1.0, 1.0});
  CHECK(identify(bank, constant(1.0)).label == "b");
  const auto mirrored = point_bank({"x", "y"}, {-1.0, 1.0});
  CHECK(identify(mirrored, constant(0.0)).label == "x");
}

TEST_CASE("identify rejects impossible utterances and wrong dimensions") {
  const auto bank = point_bank({"a", "b"}, {0.0, 1.0});
  CHECK_THROWS_AS(identify(bank, constant(1e200)), NumericError);
  CHECK_THROWS_AS(identify(bank, FeatureSequence(4, 2)), DataError);
}

TEST_CASE("ConditionBank validation") {
  Rng rng(501);
  const auto m2 = oracle::random_hmm2(rng, 2, 1, 2);
  const auto m1 = oracle::random_hmm1(rng, 2, 1, 2);
  const auto other = oracle::random_hmm2(rng, 3, 1, 2);
  CHECK_THROWS_AS(ConditionBank({}, {}), DataError);
  CHECK_THROWS_AS(ConditionBank({"a", "a"}, {m2, m2}), DataError);
  CHECK_THROWS_AS(ConditionBank({"a", "b"}, {m2, m1}), DataError);
  CHECK_THROWS_AS(ConditionBank({"a", "b"}, {m2, other}), DataError);
  const ConditionBank ok({"a", "b"}, {m2, m2});
  CHECK(ok.index_of("b") == 1u);
  CHECK_FALSE(ok.index_of("c"));
}

TEST_CASE("confusion matrix orientation and percentages") {
  ConfusionMatrix cm({"neutral", "angry"});
  cm.add(0, 0, 3);  // neutral identified as neutral
  cm.add(1, 0, 1);  // neutral identified as angry
  cm.add(1, 1, 2);
  CHECK(cm.column_total(0) == 4);
  CHECK(cm.total() == 6);
  CHECK(*cm.rate(0) == 75.0);
  CHECK(*cm.percentage(1, 0) == 25.0);
  CHECK(*cm.rate(1) == 100.0);
  ConfusionMatrix empty({"a"});
  CHECK_FALSE(empty.rate(0));
  CHECK_THROWS_AS(cm.add(2, 0), DataError);
}

TEST_CASE("evaluate tallies a perfect bank on the diagonal") {
  const auto bank = point_bank({"a", "b"}, {-10.0, 10.0});
  LabeledCorpus tests{{"a", {constant(-10.0), constant(-9.0)}}, {"b", {constant(9.5)}}};
  const auto report = evaluate(bank, tests);
  CHECK(report.confusion.count(0, 0) == 2);
  CHECK(report.confusion.count(1, 1) == 1);
  CHECK(*report.confusion.rate(0) == 100.0);
  CHECK(report.protocol.order == 2);
  LabeledCorpus unknown{{"c", {constant(0.0)}}};
  CHECK_THROWS_AS(evaluate(bank, unknown), DataError);
}

TEST_CASE("rounding is half away from zero at one decimal") {
  CHECK(round_to_tenth(26.666) == doctest::Approx(26.7));
  CHECK(round_to_tenth(0.25) == doctest::Approx(0.3));
  CHECK(round_to_tenth(-0.25) == doctest::Approx(-0.3));
  CHECK(round_to_tenth(-0.01) == 0.0);
  CHECK_FALSE(std::signbit(round_to_tenth(-0.01)));
}

TEST_CASE("improvement rate on the published average rates") {
  const double hmm1[] = {30, 54, 38, 59, 49, 99};
  const double hmm2[] = {38, 60, 46, 64, 55, 99};
  const double want[] = {26.7, 11.1, 21.1, 8.5, 12.2, 0.0};
  for (int i = 0; i < 6; ++i) CHECK(improvement_rate(hmm1[i], hmm2[i]) == doctest::Approx(want[i]).epsilon(1e-12));
  CHECK_THROWS_AS(improvement_rate(0.0, 5.0), NumericError);
}

TEST_CASE("compare_reports on the published confusion matrices") {
  const auto table = compare_reports(published::hmm1_report(), published::hmm2_report());
  CHECK(table.labels == published::kConditions);
  const std::vector<double> want{0.0, 26.7, 11.1, 21.1, 8.5, 12.2};
  for (std::size_t i = 0; i < 6; ++i) CHECK(table.rates[i] == doctest::Approx(want[i]).epsilon(1e-12));

  const auto same = compare_reports(published::hmm1_report(), published::hmm1_report());
  for (double r : same.rates) CHECK(r == 0.0);

  EvaluationReport other({"neutral", "angry"});
  other.record(0, 0);
  other.record(1, 1);
  CHECK_THROWS_AS(compare_reports(published::hmm1_report(), other), DataError);
}

TEST_CASE("report JSON round-trips and agrees with the text tables") {
  auto report = published::hmm1_report();
  const auto json_text = report_to_json(report);
  const auto back = report_from_json(json_text);
  CHECK(back.confusion == report.confusion);
  CHECK(back.protocol == report.protocol);
  CHECK(report_to_json(back) == json_text);

  const auto doc = nlohmann::json::parse(json_text);
  CHECK(doc.at("rates")[1].get<double>() == 30.0);
  CHECK(doc.at("percentages")[2][1].get<double>() == 34.0);
  CHECK(doc.at("utterances")[0].get<int>() == 100);
  const auto text = render_report_text(report);
  CHECK(text.find("30.0%") != std::string::npos);
  CHECK(text.find("34.0%") != std::string::npos);
}

TEST_CASE("report text rendering matches the golden file") {
  auto report = published::hmm1_report();
  const auto text = render_report_text(report);
  CHECK(text == read_text_file(std::string(GOLDEN_DIR) + "/hmm1_report.txt"));
  const auto table = compare_reports(published::hmm1_report(), published::hmm2_report());
  CHECK(render_improvement_text(table) == read_text_file(std::string(GOLDEN_DIR) + "/improvement.txt"));
}

TEST_CASE("group columns follow first-seen order") {
  EvaluationReport report({"a", "b"});
  report.record(0, 0, "male");
  report.record(1, 0, "female");
  report.record(1, 1, "female");
  CHECK(report.groups == std::vector<std::string>{"male", "female"});
  CHECK(*report.group_confusion[0].rate(0) == 100.0);
  CHECK(*report.group_confusion[1].rate(0) == 0.0);
  CHECK(*report.confusion.rate(0) == 50.0);
  const auto back = report_from_json(report_to_json(report));
  CHECK(back.groups == report.groups);
  CHECK(back.group_confusion == report.group_confusion);
}
