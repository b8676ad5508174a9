#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hmm2/features.hpp"
#include "hmm2/kernels.hpp"
#include "hmm2/model_io.hpp"
#include "hmm2/training.hpp"

namespace hmm2 {

enum class Scoring { kForward, kViterbi };

std::string_view to_string(Scoring scoring);
Scoring parse_scoring(std::string_view text);

// Ordered (label, sequences) pairs. Order is significant: it fixes bank
// order, tie-breaking and report layout.
using LabeledCorpus = std::vector<std::pair<std::string, std::vector<FeatureSequence>>>;

// Speaker/sentence a bank was trained for; both empty for a pooled bank.
struct BankScope {
  std::string speaker;
  std::string sentence;

  bool pooled() const { return speaker.empty() && sentence.empty(); }
};

// Closed set of talking conditions, one trained model each. All models
// share order, N, M and D.
class ConditionBank {
 public:
  ConditionBank(std::vector<std::string> labels, std::vector<AnyModel> models, BankScope scope = {});

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<AnyModel>& models() const { return models_; }
  const AnyModel& model(std::size_t i) const { return models_[i]; }
  const BankScope& scope() const { return scope_; }
  int order() const { return model_order(models_.front()); }
  std::size_t dim() const { return dim_; }
  std::size_t num_states() const { return states_; }
  std::size_t num_mixtures() const { return mixtures_; }
  std::optional<std::size_t> index_of(std::string_view label) const;

 private:
  std::vector<std::string> labels_;
  std::vector<AnyModel> models_;
  BankScope scope_;
  std::size_t dim_ = 0;
  std::size_t states_ = 0;
  std::size_t mixtures_ = 0;
};

struct BankSpec {
  int order = 2;
  std::size_t states = 5;
  std::size_t mixtures = 5;
  Topology topology = Topology::kLeftRight;
  TrainConfig train;
};

struct BankTraining {
  ConditionBank bank;
  std::vector<std::vector<double>> traces;  // per label
  std::vector<std::vector<ZeroOccupancy>> zero_occupancy;
};

// Trains one model per label (flat start followed by Baum-Welch). Labels
// train independently and in parallel under spec.train.exec.
BankTraining train_bank(const LabeledCorpus& training, const BankSpec& spec, BankScope scope = {});

struct IdentificationResult {
  std::size_t predicted = 0;
  std::string label;
  std::vector<double> scores;  // log-likelihood per bank label
};

// Log score of obs under every model; kLogZero where no path exists.
std::vector<double> score_models(const ConditionBank& bank, const FeatureSequence& obs, Scoring scoring);

// Picks the label whose model scores highest; ties go to the earlier label.
// Throws NumericError when every score is kLogZero.
IdentificationResult identify(const ConditionBank& bank, const FeatureSequence& obs,
                              Scoring scoring = Scoring::kForward);

std::vector<IdentificationResult> identify_batch(const ConditionBank& bank, std::span<const FeatureSequence> batch,
                                                 Scoring scoring = Scoring::kForward, Exec exec = Exec::kParallel);

// Count matrix indexed [evaluated-as][portrayed-as]; percentages are
// normalized per portrayed (true) column.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  void add(std::size_t predicted, std::size_t truth, std::size_t count = 1);
  std::size_t count(std::size_t predicted, std::size_t truth) const { return counts_[predicted * size() + truth]; }
  std::size_t column_total(std::size_t truth) const;
  std::size_t total() const;
  // Column percentage, or nullopt when the column is empty.
  std::optional<double> percentage(std::size_t predicted, std::size_t truth) const;
  // Identification rate per condition: the diagonal percentage.
  std::optional<double> rate(std::size_t truth) const { return percentage(truth, truth); }
  void merge(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<std::size_t> counts_;
};

struct ReportProtocol {
  int order = 2;
  std::string scoring = "forward";
  std::string bank_scope = "per-speaker-sentence";
  std::size_t states = 0;
  std::size_t mixtures = 0;
  std::string topology;

  friend bool operator==(const ReportProtocol&, const ReportProtocol&) = default;
};

struct EvaluationReport {
  ConfusionMatrix confusion;
  // Optional speaker-group breakdown (e.g. male/female), in first-seen order.
  std::vector<std::string> groups;
  std::vector<ConfusionMatrix> group_confusion;
  ReportProtocol protocol;

  EvaluationReport() = default;
  explicit EvaluationReport(std::vector<std::string> labels) : confusion(std::move(labels)) {}

  void record(std::size_t predicted, std::size_t truth, const std::string& group = {});
  void merge(const EvaluationReport& other);
};

// Identifies every test utterance and tallies predictions against truth.
// Test labels must all be in the bank.
EvaluationReport evaluate(const ConditionBank& bank, const LabeledCorpus& tests, Scoring scoring = Scoring::kForward,
                          const std::string& group = {}, Exec exec = Exec::kParallel);

// Rounds to one decimal, halves away from zero.
double round_to_tenth(double x);

// 100 (next - baseline) / baseline. Throws NumericError for a zero baseline.
double improvement_rate_exact(double baseline, double next);
// The same, rounded to one decimal.
double improvement_rate(double baseline, double next);

struct ImprovementTable {
  std::vector<std::string> labels;
  std::vector<double> rates;  // rounded, one per label
};

// Per-condition improvement of `improved` over `baseline`. The two reports
// must cover the same condition labels.
ImprovementTable compare_reports(const EvaluationReport& baseline, const EvaluationReport& improved);

// Serialization and plain-text tables.
std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const std::string& text);
std::string render_report_text(const EvaluationReport& report);
std::string improvement_to_json(const ImprovementTable& table);
std::string render_improvement_text(const ImprovementTable& table);

}  // namespace hmm2
