// hmm2id: talking-condition identification with first- and second-order
// HMMs. Subcommands: extract, train, identify, evaluate, compare, synth.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <fmt/format.h>

#include "hmm2/audio.hpp"
#include "hmm2/bank_io.hpp"
#include "hmm2/classifier.hpp"
#include "hmm2/corpus.hpp"
#include "hmm2/error.hpp"
#include "hmm2/feature_io.hpp"
#include "hmm2/synth.hpp"

namespace fs = std::filesystem;
using namespace hmm2;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kDataError = 3, kNumericError = 4 };

struct Options {
  std::string manifest;
  std::string out;
  std::string bank;
  std::string features;
  std::string spec;
  std::string report1;
  std::string report2;
  std::string speaker;
  std::string sentence;
  FrameParams frame;
  bool csv = false;
  int order = 2;
  std::size_t states = 5;
  std::size_t mixtures = 5;
  std::string topology = "left-right";
  std::string scoring = "forward";
  std::uint64_t seed = 0;
  std::size_t max_iter = 40;
  double tol = 1e-5;
  double transition_floor = 0.0;
  bool freeze_initials = false;
  bool pooled = false;
  std::size_t train_count = 5;
  std::size_t test_count = 4;
  bool shuffle = false;
  std::string format = "text";
};

std::vector<ManifestEntry> load_entries(const Options& opt) {
  std::vector<std::string> warnings;
  auto entries = load_manifest(opt.manifest, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return entries;
}

std::vector<ManifestEntry> resolved_splits(const Options& opt) {
  SplitOptions split;
  split.train_count = opt.train_count;
  split.test_count = opt.test_count;
  split.shuffle = opt.shuffle;
  split.seed = opt.seed;
  return apply_split_protocol(load_entries(opt), split);
}

std::string entry_stem(const ManifestEntry& e) {
  return fmt::format("{}_{}_{}_{}", e.speaker, e.sentence, e.condition, e.token);
}

int cmd_extract(const Options& opt) {
  opt.frame.validate();
  const auto entries = load_entries(opt);
  const fs::path out(opt.out);
  fs::create_directories(out / "features");

  struct Outcome {
    std::optional<FeatureSequence> features;
    std::string error;
  };
  std::vector<Outcome> outcomes(entries.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(entries.size()); ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      const auto path = resolve_entry_path(opt.manifest, entries[u]);
      const auto clip = decode_pcm16_wav(read_file_bytes(path));
      auto seq = extract_features(clip, opt.frame);
      seq.provenance.source_id = path.string();
      outcomes[u].features = std::move(seq);
    } catch (const std::exception& e) {
      outcomes[u].error = e.what();
    }
  }

  std::vector<ManifestEntry> updated;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!outcomes[i].features) {
      ++failures;
      std::cerr << "error: " << entries[i].path << ": " << outcomes[i].error << '\n';
      continue;
    }
    const auto& seq = *outcomes[i].features;
    ManifestEntry e = entries[i];
    e.path = "features/" + entry_stem(e) + ".lpcc";
    save_features(out / e.path, seq);
    if (opt.csv) write_text_file(out / ("features/" + entry_stem(e) + ".csv"), features_to_csv(seq));
    std::cout << fmt::format("{}\tframes={}\tdegenerate={}\n", e.path, seq.frames(), seq.provenance.degenerate_frames);
    updated.push_back(std::move(e));
  }
  save_manifest(out / "manifest.tsv", updated);
  std::cout << fmt::format("extracted {} of {} entries\n", updated.size(), entries.size());
  return failures ? kDataError : kOk;
}

// Groups train or test entries by bank scope, keeping first-seen order for
// scopes and conditions.
struct ScopeData {
  BankScope scope;
  std::vector<std::string> conditions;
  std::map<std::string, std::vector<const ManifestEntry*>> train;
  std::map<std::string, std::vector<const ManifestEntry*>> test;
};

std::vector<ScopeData> group_by_scope(const std::vector<ManifestEntry>& entries, bool pooled) {
  std::vector<ScopeData> scopes;
  for (const auto& e : entries) {
    const BankScope scope = pooled ? BankScope{} : BankScope{e.speaker, e.sentence};
    auto it = std::find_if(scopes.begin(), scopes.end(), [&](const ScopeData& s) {
      return s.scope.speaker == scope.speaker && s.scope.sentence == scope.sentence;
    });
    if (it == scopes.end()) {
      scopes.push_back({scope, {}, {}, {}});
      it = scopes.end() - 1;
    }
    if (std::find(it->conditions.begin(), it->conditions.end(), e.condition) == it->conditions.end())
      it->conditions.push_back(e.condition);
    if (e.split == Split::kTrain) it->train[e.condition].push_back(&e);
    if (e.split == Split::kTest) it->test[e.condition].push_back(&e);
  }
  return scopes;
}

std::string scope_name(const BankScope& scope) {
  return scope.pooled() ? std::string("pooled") : fmt::format("{}/{}", scope.speaker, scope.sentence);
}

int cmd_train(const Options& opt) {
  if (opt.order != 1 && opt.order != 2) throw DataError("--order must be 1 or 2");
  const auto entries = resolved_splits(opt);
  const auto scopes = group_by_scope(entries, opt.pooled);

  BankSpec spec;
  spec.order = opt.order;
  spec.states = opt.states;
  spec.mixtures = opt.mixtures;
  spec.topology = parse_topology(opt.topology);
  spec.train.max_iterations = opt.max_iter;
  spec.train.tolerance = opt.tol;
  spec.train.transition_floor = opt.transition_floor;
  spec.train.seed = opt.seed;
  spec.train.freeze_initials = opt.freeze_initials;

  std::vector<ConditionBank> banks;
  std::string log = "scope\tcondition\titeration\tlog_likelihood\n";
  for (const auto& s : scopes) {
    LabeledCorpus training;
    for (const auto& c : s.conditions) {
      const auto it = s.train.find(c);
      if (it == s.train.end())
        throw DataError(fmt::format("no training data for condition '{}' in scope {}", c, scope_name(s.scope)));
      std::vector<FeatureSequence> seqs;
      for (const auto* e : it->second) seqs.push_back(load_features(resolve_entry_path(opt.manifest, *e)));
      training.emplace_back(c, std::move(seqs));
    }
    auto trained = train_bank(training, spec, s.scope);
    for (std::size_t l = 0; l < training.size(); ++l) {
      const auto& trace = trained.traces[l];
      for (std::size_t i = 0; i < trace.size(); ++i)
        log += fmt::format("{}\t{}\t{}\t{}\n", scope_name(s.scope), training[l].first, i, trace[i]);
      std::cout << fmt::format("{}\t{}\titerations={}\tlog_likelihood={}\n", scope_name(s.scope), training[l].first,
                               trace.size() - 1, trace.back());
      for (const auto& z : trained.zero_occupancy[l]) {
        std::cerr << fmt::format("note: {} {}: iteration {} state {}{} had zero occupancy\n", scope_name(s.scope),
                                 training[l].first, z.iteration, z.state,
                                 z.component < 0 ? std::string() : fmt::format(" component {}", z.component));
      }
    }
    banks.push_back(std::move(trained.bank));
  }
  if (banks.empty()) throw DataError("manifest has no entries to train on");
  save_banks(opt.out, banks);
  write_text_file(fs::path(opt.out) / "train_log.tsv", log);
  return kOk;
}

int cmd_identify(const Options& opt) {
  const auto banks = load_banks(opt.bank);
  const ConditionBank* bank = nullptr;
  if (banks.size() == 1) {
    bank = &banks.front();
  } else {
    bank = find_bank(banks, opt.speaker, opt.sentence);
    if (!bank) throw DataError("bank directory has several scopes; select one with --speaker and --sentence");
  }
  const auto obs = load_features(opt.features);
  const auto result = identify(*bank, obs, parse_scoring(opt.scoring));
  if (opt.format == "json") {
    nlohmann::json scores = nlohmann::json::object();
    for (std::size_t i = 0; i < bank->size(); ++i) scores[bank->labels()[i]] = result.scores[i];
    nlohmann::json doc = {{"predicted", result.label}, {"scoring", opt.scoring}, {"scores", scores}};
    std::cout << doc.dump(1) << '\n';
  } else {
    std::cout << "predicted\t" << result.label << '\n';
    for (std::size_t i = 0; i < bank->size(); ++i)
      std::cout << fmt::format("{}\t{}\n", bank->labels()[i], result.scores[i]);
  }
  return kOk;
}

int cmd_evaluate(const Options& opt) {
  const auto banks = load_banks(opt.bank);
  const auto entries = resolved_splits(opt);
  const Scoring scoring = parse_scoring(opt.scoring);

  // Report labels follow the manifest's first-seen condition order.
  std::vector<std::string> labels;
  for (const auto& e : entries)
    if (std::find(labels.begin(), labels.end(), e.condition) == labels.end()) labels.push_back(e.condition);

  EvaluationReport report(labels);
  bool any = false;
  for (const auto& e : entries) {
    if (e.split != Split::kTest) continue;
    const ConditionBank* bank = find_bank(banks, e.speaker, e.sentence);
    if (!bank) throw DataError(fmt::format("no bank for speaker '{}', sentence '{}'", e.speaker, e.sentence));
    if (!bank->index_of(e.condition))
      throw DataError(fmt::format("test condition '{}' is not in the bank for {}", e.condition, scope_name(bank->scope())));
    const auto obs = load_features(resolve_entry_path(opt.manifest, e));
    const auto result = identify(*bank, obs, scoring);
    const auto truth = std::find(labels.begin(), labels.end(), e.condition) - labels.begin();
    const auto predicted = std::find(labels.begin(), labels.end(), result.label) - labels.begin();
    if (static_cast<std::size_t>(predicted) >= labels.size())
      throw DataError(fmt::format("bank label '{}' does not occur in the manifest", result.label));
    report.record(static_cast<std::size_t>(predicted), static_cast<std::size_t>(truth), e.group);
    if (!any) {
      report.protocol.order = bank->order();
      report.protocol.states = bank->num_states();
      report.protocol.mixtures = bank->num_mixtures();
      report.protocol.topology =
          std::string(to_string(std::visit([](const auto& m) { return m.topology; }, bank->model(0))));
      report.protocol.bank_scope = bank->scope().pooled() ? "pooled" : "per-speaker-sentence";
      any = true;
    }
  }
  if (!any) throw DataError("manifest has no test entries");
  report.protocol.scoring = std::string(to_string(scoring));

  const std::string json_text = report_to_json(report);
  const std::string text = render_report_text(report);
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    write_text_file(fs::path(opt.out) / "report.json", json_text);
    write_text_file(fs::path(opt.out) / "report.txt", text);
  }
  std::cout << (opt.format == "json" ? json_text : text);
  return kOk;
}

int cmd_compare(const Options& opt) {
  const auto baseline = report_from_json(read_text_file(opt.report1));
  const auto improved = report_from_json(read_text_file(opt.report2));
  const auto table = compare_reports(baseline, improved);
  const std::string json_text = improvement_to_json(table);
  const std::string text = render_improvement_text(table);
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    write_text_file(fs::path(opt.out) / "improvement.json", json_text);
    write_text_file(fs::path(opt.out) / "improvement.txt", text);
  }
  std::cout << (opt.format == "json" ? json_text : text);
  return kOk;
}

int cmd_synth(const Options& opt) {
  const auto spec = synth_spec_from_json(read_text_file(opt.spec));
  const auto corpus = generate_synthetic_corpus(spec);
  write_synthetic_corpus(corpus, opt.out);
  std::cout << fmt::format("wrote {} feature files for {} conditions to {}\n", corpus.features.size(),
                           corpus.labels.size(), opt.out);
  return kOk;
}

void add_training_flags(CLI::App* cmd, Options& opt) {
  cmd->add_option("--order", opt.order, "Model order")->check(CLI::IsMember({1, 2}));
  cmd->add_option("--states", opt.states, "States per model (N)")->check(CLI::PositiveNumber);
  cmd->add_option("--mixtures", opt.mixtures, "Gaussian components per state (M)")->check(CLI::PositiveNumber);
  cmd->add_option("--topology", opt.topology, "Transition topology")
      ->check(CLI::IsMember({"ergodic", "left-right"}));
  cmd->add_option("--max-iter", opt.max_iter, "Maximum Baum-Welch iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", opt.tol, "Relative log-likelihood convergence threshold")->check(CLI::PositiveNumber);
  cmd->add_option("--transition-floor", opt.transition_floor, "Lower bound on re-estimated transition probabilities")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--freeze-initials", opt.freeze_initials, "Do not re-estimate the initial vector and first-step matrix");
  cmd->add_flag("--pooled", opt.pooled, "One bank across all speakers and sentences");
}

void add_split_flags(CLI::App* cmd, Options& opt) {
  cmd->add_option("--train-count", opt.train_count, "Training tokens per group for auto splits");
  cmd->add_option("--test-count", opt.test_count, "Test tokens per group for auto splits");
  cmd->add_flag("--shuffle", opt.shuffle, "Seeded shuffle of tokens before splitting");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Talking-condition identification with first- and second-order HMMs"};
  app.require_subcommand(1);
  Options opt;

  auto* extract = app.add_subcommand("extract", "Compute LPCC features for every WAV in a manifest");
  extract->add_option("--manifest", opt.manifest, "Manifest of WAV files")->required()->check(CLI::ExistingFile);
  extract->add_option("--out", opt.out, "Output directory")->required();
  extract->add_option("--window-ms", opt.frame.window_ms, "Analysis window length (ms)");
  extract->add_option("--shift-ms", opt.frame.shift_ms, "Frame shift (ms)");
  extract->add_option("--lpc-order", opt.frame.lpc_order, "LPC order");
  extract->add_option("--cepstral-order", opt.frame.cepstral_order, "Number of LPCC coefficients");
  extract->add_option("--pre-emphasis", opt.frame.pre_emphasis, "Pre-emphasis coefficient in [0, 1)");
  extract->add_flag("--csv", opt.csv, "Also write a CSV copy of each feature file");

  auto* train = app.add_subcommand("train", "Train one model per talking condition");
  train->add_option("--manifest", opt.manifest, "Manifest of feature files")->required()->check(CLI::ExistingFile);
  train->add_option("--out", opt.out, "Bank directory")->required();
  train->add_option("--seed", opt.seed, "Initialization seed");
  add_training_flags(train, opt);
  add_split_flags(train, opt);

  auto* ident = app.add_subcommand("identify", "Identify the talking condition of one utterance");
  ident->add_option("--bank", opt.bank, "Bank directory")->required()->check(CLI::ExistingDirectory);
  ident->add_option("--features", opt.features, "LPCC feature file")->required()->check(CLI::ExistingFile);
  ident->add_option("--scoring", opt.scoring, "Scoring rule")->check(CLI::IsMember({"forward", "viterbi"}));
  ident->add_option("--speaker", opt.speaker, "Speaker scope");
  ident->add_option("--sentence", opt.sentence, "Sentence scope");
  ident->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"json", "text"}));

  auto* eval = app.add_subcommand("evaluate", "Identify every test utterance and report confusion statistics");
  eval->add_option("--bank", opt.bank, "Bank directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--manifest", opt.manifest, "Manifest of feature files")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", opt.out, "Directory for report.json and report.txt");
  eval->add_option("--scoring", opt.scoring, "Scoring rule")->check(CLI::IsMember({"forward", "viterbi"}));
  eval->add_option("--seed", opt.seed, "Seed for --shuffle");
  eval->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"json", "text"}));
  add_split_flags(eval, opt);

  auto* compare = app.add_subcommand("compare", "Improvement rate of a second report over a baseline report");
  compare->add_option("baseline", opt.report1, "Baseline report JSON")->required()->check(CLI::ExistingFile);
  compare->add_option("improved", opt.report2, "Improved report JSON")->required()->check(CLI::ExistingFile);
  compare->add_option("--out", opt.out, "Directory for improvement.json and improvement.txt");
  compare->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"json", "text"}));

  auto* synth = app.add_subcommand("synth", "Generate a synthetic feature-space corpus");
  synth->add_option("--spec", opt.spec, "Synthetic corpus spec (JSON)")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", opt.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*extract) return cmd_extract(opt);
    if (*train) return cmd_train(opt);
    if (*ident) return cmd_identify(opt);
    if (*eval) return cmd_evaluate(opt);
    if (*compare) return cmd_compare(opt);
    if (*synth) return cmd_synth(opt);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
