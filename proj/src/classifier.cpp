#include "hmm2/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <set>

#include <fmt/format.h>

#include "hmm2/error.hpp"
#include "hmm2/logmath.hpp"
#include "hmm2/trellis.hpp"

namespace hmm2 {

std::string_view to_string(Scoring scoring) { return scoring == Scoring::kForward ? "forward" : "viterbi"; }

Scoring parse_scoring(std::string_view text) {
  if (text == "forward") return Scoring::kForward;
  if (text == "viterbi") return Scoring::kViterbi;
  throw DataError(fmt::format("unknown scoring mode '{}'", text));
}

ConditionBank::ConditionBank(std::vector<std::string> labels, std::vector<AnyModel> models, BankScope scope)
    : labels_(std::move(labels)), models_(std::move(models)), scope_(std::move(scope)) {
  if (labels_.empty()) throw DataError("condition bank has no labels");
  if (labels_.size() != models_.size()) throw DataError("condition bank needs one model per label");
  std::set<std::string> seen;
  for (const auto& l : labels_)
    if (!seen.insert(l).second) throw DataError(fmt::format("duplicate condition label '{}'", l));

  auto shape = [](const AnyModel& m) {
    return std::visit([](const auto& x) { return std::array<std::size_t, 3>{x.num_states(), x.num_mixtures(), x.dim()}; },
                      m);
  };
  const auto first = shape(models_.front());
  for (const auto& m : models_) {
    if (m.index() != models_.front().index()) throw DataError("bank mixes first- and second-order models");
    if (shape(m) != first) throw DataError("bank models disagree on N, M or D");
  }
  states_ = first[0];
  mixtures_ = first[1];
  dim_ = first[2];
}

std::optional<std::size_t> ConditionBank::index_of(std::string_view label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

BankTraining train_bank(const LabeledCorpus& training, const BankSpec& spec, BankScope scope) {
  if (training.empty()) throw DataError("no condition labels to train");
  if (spec.order != 1 && spec.order != 2) throw DataError(fmt::format("unsupported model order {}", spec.order));
  const std::size_t dim = training.front().second.empty() ? 0 : training.front().second.front().dim();
  for (const auto& [label, seqs] : training) {
    if (seqs.empty()) throw DataError(fmt::format("condition '{}' has no training sequences", label));
    for (const auto& s : seqs)
      if (s.dim() != dim) throw DataError(fmt::format("condition '{}' has sequences of a different dimension", label));
  }

  const std::size_t count = training.size();
  std::vector<std::optional<AnyModel>> models(count);
  std::vector<std::vector<double>> traces(count);
  std::vector<std::vector<ZeroOccupancy>> zero(count);
  std::vector<std::exception_ptr> errors(count);

  TrainConfig cfg = spec.train;
  const Exec outer = cfg.exec;
  cfg.exec = Exec::kSerial;

#pragma omp parallel for schedule(dynamic) if (outer == Exec::kParallel)
  for (std::ptrdiff_t li = 0; li < static_cast<std::ptrdiff_t>(count); ++li) {
    const auto l = static_cast<std::size_t>(li);
    try {
      const auto& seqs = training[l].second;
      if (spec.order == 2) {
        auto init = init_model2(seqs, spec.states, spec.mixtures, spec.topology, cfg.seed, cfg);
        auto result = baum_welch2(init, seqs, cfg);
        traces[l] = std::move(result.trace);
        zero[l] = std::move(result.zero_occupancy);
        models[l] = std::move(result.model);
      } else {
        auto init = init_model1(seqs, spec.states, spec.mixtures, spec.topology, cfg.seed, cfg);
        auto result = baum_welch1(init, seqs, cfg);
        traces[l] = std::move(result.trace);
        zero[l] = std::move(result.zero_occupancy);
        models[l] = std::move(result.model);
      }
    } catch (...) {
      errors[l] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<std::string> labels;
  std::vector<AnyModel> trained;
  for (std::size_t l = 0; l < count; ++l) {
    labels.push_back(training[l].first);
    std::visit([&](auto& m) { m.metadata["label"] = training[l].first; }, *models[l]);
    trained.push_back(std::move(*models[l]));
  }
  return {ConditionBank(std::move(labels), std::move(trained), std::move(scope)), std::move(traces), std::move(zero)};
}

namespace {

double score_one(const AnyModel& model, const FeatureSequence& obs, Scoring scoring) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        try {
          if constexpr (std::is_same_v<M, Hmm2Model>) {
            return scoring == Scoring::kForward ? forward2(m, obs).log_likelihood : viterbi2(m, obs).log_score;
          } else {
            return scoring == Scoring::kForward ? forward1(m, obs).log_likelihood : viterbi1(m, obs).log_score;
          }
        } catch (const NumericError&) {
          return kLogZero;
        }
      },
      model);
}

}  // namespace

std::vector<double> score_models(const ConditionBank& bank, const FeatureSequence& obs, Scoring scoring) {
  if (obs.dim() != bank.dim())
    throw DataError(fmt::format("utterance has dimension {}, bank expects {}", obs.dim(), bank.dim()));
  std::vector<double> scores(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) scores[i] = score_one(bank.model(i), obs, scoring);
  return scores;
}

IdentificationResult identify(const ConditionBank& bank, const FeatureSequence& obs, Scoring scoring) {
  IdentificationResult result;
  result.scores = score_models(bank, obs, scoring);
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.scores.size(); ++i)
    if (result.scores[i] > result.scores[best]) best = i;
  if (is_log_zero(result.scores[best]) || std::isnan(result.scores[best]))
    throw NumericError("no model in the bank assigns the utterance a non-zero probability");
  result.predicted = best;
  result.label = bank.labels()[best];
  return result;
}

std::vector<IdentificationResult> identify_batch(const ConditionBank& bank, std::span<const FeatureSequence> batch,
                                                 Scoring scoring, Exec exec) {
  std::vector<IdentificationResult> out(batch.size());
  std::vector<std::exception_ptr> errors(batch.size());
#pragma omp parallel for schedule(dynamic) if (exec == Exec::kParallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(batch.size()); ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      out[u] = identify(bank, batch[u], scoring);
    } catch (...) {
      errors[u] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels)
    : labels_(std::move(labels)), counts_(labels_.size() * labels_.size(), 0) {}

void ConfusionMatrix::add(std::size_t predicted, std::size_t truth, std::size_t count) {
  if (predicted >= size() || truth >= size()) throw DataError("confusion matrix index out of range");
  counts_[predicted * size() + truth] += count;
}

std::size_t ConfusionMatrix::column_total(std::size_t truth) const {
  std::size_t total = 0;
  for (std::size_t p = 0; p < size(); ++p) total += count(p, truth);
  return total;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t total = 0;
  for (auto c : counts_) total += c;
  return total;
}

std::optional<double> ConfusionMatrix::percentage(std::size_t predicted, std::size_t truth) const {
  const std::size_t column = column_total(truth);
  if (column == 0) return std::nullopt;
  return 100.0 * static_cast<double>(count(predicted, truth)) / static_cast<double>(column);
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.labels_ != labels_) throw DataError("cannot merge confusion matrices with different labels");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

void EvaluationReport::record(std::size_t predicted, std::size_t truth, const std::string& group) {
  confusion.add(predicted, truth);
  if (group.empty()) return;
  auto it = std::find(groups.begin(), groups.end(), group);
  if (it == groups.end()) {
    groups.push_back(group);
    group_confusion.emplace_back(confusion.labels());
    it = groups.end() - 1;
  }
  group_confusion[static_cast<std::size_t>(it - groups.begin())].add(predicted, truth);
}

void EvaluationReport::merge(const EvaluationReport& other) {
  confusion.merge(other.confusion);
  for (std::size_t g = 0; g < other.groups.size(); ++g) {
    auto it = std::find(groups.begin(), groups.end(), other.groups[g]);
    if (it == groups.end()) {
      groups.push_back(other.groups[g]);
      group_confusion.push_back(other.group_confusion[g]);
    } else {
      group_confusion[static_cast<std::size_t>(it - groups.begin())].merge(other.group_confusion[g]);
    }
  }
}

EvaluationReport evaluate(const ConditionBank& bank, const LabeledCorpus& tests, Scoring scoring,
                          const std::string& group, Exec exec) {
  EvaluationReport report(bank.labels());
  report.protocol.order = bank.order();
  report.protocol.scoring = std::string(to_string(scoring));
  report.protocol.bank_scope = bank.scope().pooled() ? "pooled" : "per-speaker-sentence";
  report.protocol.states = bank.num_states();
  report.protocol.mixtures = bank.num_mixtures();
  report.protocol.topology =
      std::string(to_string(std::visit([](const auto& m) { return m.topology; }, bank.model(0))));

  for (const auto& [label, seqs] : tests) {
    const auto truth = bank.index_of(label);
    if (!truth) throw DataError(fmt::format("test label '{}' is not in the bank", label));
    const auto results = identify_batch(bank, seqs, scoring, exec);
    for (const auto& r : results) report.record(r.predicted, *truth, group);
  }
  return report;
}

double round_to_tenth(double x) {
  const double r = std::round(x * 10.0) / 10.0;
  return r == 0.0 ? 0.0 : r;
}

double improvement_rate_exact(double baseline, double next) {
  if (baseline == 0.0) throw NumericError("improvement rate undefined for a zero baseline");
  return 100.0 * (next - baseline) / baseline;
}

double improvement_rate(double baseline, double next) {
  return round_to_tenth(improvement_rate_exact(baseline, next));
}

ImprovementTable compare_reports(const EvaluationReport& baseline, const EvaluationReport& improved) {
  const auto& base_labels = baseline.confusion.labels();
  const auto& new_labels = improved.confusion.labels();
  if (std::set(base_labels.begin(), base_labels.end()) != std::set(new_labels.begin(), new_labels.end()))
    throw DataError("reports cover different condition labels");

  ImprovementTable table;
  for (std::size_t i = 0; i < base_labels.size(); ++i) {
    const auto j = static_cast<std::size_t>(std::find(new_labels.begin(), new_labels.end(), base_labels[i]) -
                                            new_labels.begin());
    const auto before = baseline.confusion.rate(i);
    const auto after = improved.confusion.rate(j);
    if (!before || !after)
      throw DataError(fmt::format("condition '{}' has no test utterances in one of the reports", base_labels[i]));
    table.labels.push_back(base_labels[i]);
    table.rates.push_back(improvement_rate(*before, *after));
  }
  return table;
}

}  // namespace hmm2
