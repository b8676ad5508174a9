// Times the data-parallel kernels against their serial execution on a
// synthetic workload. Thread count follows OMP_NUM_THREADS.

#include <algorithm>
#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "hmm2/classifier.hpp"
#include "hmm2/kernels.hpp"
#include "hmm2/synth.hpp"
#include "hmm2/training.hpp"

using namespace hmm2;

namespace {

// Best of `reps` wall-clock runs, in milliseconds.
double best_ms(int reps, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  return best;
}

void report(const std::string& name, double serial, double parallel) {
  fmt::print("{:<16} {:>11.2f} {:>12.2f} {:>8.2f}x\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs parallel kernel timings"};
  std::size_t utterances = 24;
  std::size_t frames = 400;
  int reps = 3;
  app.add_option("--utterances", utterances, "Utterances in the workload")->check(CLI::PositiveNumber);
  app.add_option("--frames", frames, "Frames per utterance")->check(CLI::Range(3, 100000));
  app.add_option("--reps", reps, "Repetitions per measurement (best is reported)")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::string> labels{"neutral", "shouted", "loud", "angry", "happy", "fear"};
  auto spec = make_synth_spec(labels, 1);
  spec.tokens = std::max<std::size_t>(2, (utterances + labels.size() - 1) / labels.size());
  spec.min_frames = spec.max_frames = frames;
  const auto corpus = generate_synthetic_corpus(spec);
  std::vector<FeatureSequence> batch(corpus.features.begin(),
                                     corpus.features.begin() + static_cast<std::ptrdiff_t>(utterances));
  const auto& model = corpus.true_models.front();
  const EmissionModel emission(model.states);

  std::vector<AnyModel> models(corpus.true_models.begin(), corpus.true_models.end());
  const ConditionBank bank(labels, models);

  fmt::print("threads {}, {} utterances x {} frames, N={} M={} D={}\n", max_threads(), batch.size(), frames,
             model.num_states(), model.num_mixtures(), model.dim());
  fmt::print("{:<16} {:>11} {:>12} {:>9}\n", "kernel", "serial ms", "parallel ms", "speedup");

  auto emissions = [&](Exec exec) {
    return [&, exec] {
      for (const auto& seq : batch) compute_emissions(emission, seq, true, exec);
    };
  };
  report("emissions", best_ms(reps, emissions(Exec::kSerial)), best_ms(reps, emissions(Exec::kParallel)));

  auto estep = [&](Exec exec) { return [&, exec] { expectation2(model, batch, exec); }; };
  report("expectation2", best_ms(reps, estep(Exec::kSerial)), best_ms(reps, estep(Exec::kParallel)));

  auto ident = [&](Exec exec) { return [&, exec] { identify_batch(bank, batch, Scoring::kForward, exec); }; };
  report("identify_batch", best_ms(reps, ident(Exec::kSerial)), best_ms(reps, ident(Exec::kParallel)));
  return 0;
}
