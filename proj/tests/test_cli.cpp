#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmm2/audio.hpp"
#include "hmm2/bank_io.hpp"
#include "hmm2/classifier.hpp"
#include "hmm2/corpus.hpp"
#include "hmm2/feature_io.hpp"
#include "hmm2/model_io.hpp"
#include "hmm2/random.hpp"
#include "published_tables.hpp"

using namespace hmm2;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "hmm2_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs hmm2id with the given arguments, capturing stdout into `out`.
int run(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string(HMM2ID_PATH) + " " + args + " > " + out.string() + " 2> " + out.string() + ".err";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_wav(const fs::path& path, std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(samples);
  double prev = 0.0;
  for (auto& v : x) v = prev = 0.8 * prev + 0.1 * rng.normal();
  write_file_bytes(path, encode_pcm16_wav(x, 16000));
}

std::string synth_spec(double separation) {
  nlohmann::json spec = {{"seed", 3},
                         {"conditions", {"neutral", "angry", "fear"}},
                         {"states", 2},
                         {"mixtures", 2},
                         {"dim", 4},
                         {"separation", separation},
                         {"tokens", 9},
                         {"min_frames", 40},
                         {"max_frames", 60}};
  return spec.dump();
}

}  // namespace

TEST_CASE("cli extract writes one feature file per WAV and is repeatable") {
  const auto dir = scratch("extract");
  fs::create_directories(dir / "wav");
  std::string manifest = "speaker\tsentence\tcondition\ttoken\tpath\n";
  for (int i = 1; i <= 3; ++i) {
    write_wav(dir / "wav" / (std::to_string(i) + ".wav"), 1600 + 80 * i, i);
    manifest += "p\ts\tneutral\t" + std::to_string(i) + "\twav/" + std::to_string(i) + ".wav\n";
  }
  write_text_file(dir / "manifest.tsv", manifest);

  REQUIRE(run("extract --manifest " + (dir / "manifest.tsv").string() + " --out " + (dir / "a").string(),
              dir / "a.log") == 0);
  const auto out = load_manifest(dir / "a" / "manifest.tsv");
  REQUIRE(out.size() == 3);
  for (const auto& e : out) {
    const auto f = load_features(resolve_entry_path(dir / "a" / "manifest.tsv", e));
    CHECK(f.dim() == 16);
    CHECK(f.frames() == (1600 + 80 * static_cast<std::size_t>(e.token) - 480) / 80 + 1);
  }
  CHECK(read_text_file(dir / "a.log").find("extracted 3 of 3") != std::string::npos);

  REQUIRE(run("extract --manifest " + (dir / "manifest.tsv").string() + " --out " + (dir / "b").string(),
              dir / "b.log") == 0);
  for (const auto& e : out)
    CHECK(read_file_bytes(dir / "a" / e.path) == read_file_bytes(dir / "b" / e.path));
  CHECK(read_file_bytes(dir / "a" / "manifest.tsv") == read_file_bytes(dir / "b" / "manifest.tsv"));
}

TEST_CASE("cli extract reports a corrupt WAV and exits with a data error") {
  const auto dir = scratch("extract_bad");
  write_wav(dir / "1.wav", 2000, 1);
  write_wav(dir / "2.wav", 2000, 2);
  write_text_file(dir / "3.wav", "this is not audio");
  write_text_file(dir / "manifest.tsv",
                  "speaker\tsentence\tcondition\ttoken\tpath\n"
                  "p\ts\tc\t1\t1.wav\np\ts\tc\t2\t2.wav\np\ts\tc\t3\t3.wav\n");
  CHECK(run("extract --manifest " + (dir / "manifest.tsv").string() + " --out " + (dir / "out").string(),
            dir / "log") == 3);
  CHECK(load_manifest(dir / "out" / "manifest.tsv").size() == 2);
  CHECK(read_text_file(dir / "log.err").find("3.wav") != std::string::npos);
}

TEST_CASE("cli synth, train and evaluate on a well separated corpus") {
  const auto dir = scratch("pipeline");
  write_text_file(dir / "spec.json", synth_spec(6.0));
  REQUIRE(run("synth --spec " + (dir / "spec.json").string() + " --out " + (dir / "corpus").string(), dir / "s.log") == 0);
  const auto manifest = (dir / "corpus" / "manifest.tsv").string();
  CHECK(load_manifest(manifest).size() == 27);

  const std::string common = " --states 2 --mixtures 2 --topology ergodic --seed 1 --max-iter 10";
  REQUIRE(run("train --manifest " + manifest + " --out " + (dir / "bank2").string() + common + " --freeze-initials",
              dir / "t2.log") == 0);
  REQUIRE(run("train --manifest " + manifest + " --out " + (dir / "bank1").string() + common + " --order 1",
              dir / "t1.log") == 0);

  const auto model2 = nlohmann::json::parse(read_text_file(dir / "bank2" / "synth__s1" / "angry.json"));
  const auto model1 = nlohmann::json::parse(read_text_file(dir / "bank1" / "synth__s1" / "angry.json"));
  CHECK(model2.contains("a3"));
  CHECK_FALSE(model1.contains("a3"));
  CHECK(model2.at("metadata").at("freeze_initials") == "true");

  // Training log: a monotone trace for every condition.
  const auto log = read_text_file(dir / "bank2" / "train_log.tsv");
  std::map<std::string, double> last;
  std::size_t pos = log.find('\n') + 1;
  while (pos < log.size()) {
    const auto end = log.find('\n', pos);
    const auto line = log.substr(pos, end - pos);
    pos = end + 1;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    const auto t3 = line.find('\t', t2 + 1);
    const std::string cond = line.substr(t1 + 1, t2 - t1 - 1);
    const double ll = std::stod(line.substr(t3 + 1));
    if (last.contains(cond)) CHECK(ll >= last[cond] - 1e-8 * std::abs(ll));
    last[cond] = ll;
  }
  CHECK(last.size() == 3);

  REQUIRE(run("evaluate --bank " + (dir / "bank2").string() + " --manifest " + manifest + " --out " +
                  (dir / "report2").string() + " --format json",
              dir / "e2.log") == 0);
  const auto report = report_from_json(read_text_file(dir / "report2" / "report.json"));
  for (std::size_t c = 0; c < 3; ++c) CHECK(*report.confusion.rate(c) == 100.0);
  CHECK(read_text_file(dir / "e2.log") == read_text_file(dir / "report2" / "report.json"));
  CHECK(read_text_file(dir / "report2" / "report.txt").find("100.0%") != std::string::npos);

  // Identify one held-out utterance.
  REQUIRE(run("identify --bank " + (dir / "bank2").string() + " --features " +
                  (dir / "corpus" / "features" / "fear_7.lpcc").string() + " --format json",
              dir / "i.log") == 0);
  const auto ident = nlohmann::json::parse(read_text_file(dir / "i.log"));
  CHECK(ident.at("predicted") == "fear");
  CHECK(ident.at("scores").size() == 3);

  // Rerunning training gives byte-identical model files.
  REQUIRE(run("train --manifest " + manifest + " --out " + (dir / "bank2b").string() + common + " --freeze-initials",
              dir / "t2b.log") == 0);
  CHECK(read_file_bytes(dir / "bank2" / "synth__s1" / "fear.json") ==
        read_file_bytes(dir / "bank2b" / "synth__s1" / "fear.json"));
  CHECK(read_file_bytes(dir / "bank2" / "train_log.tsv") == read_file_bytes(dir / "bank2b" / "train_log.tsv"));
}

TEST_CASE("cli compare reproduces the published improvement rates") {
  const auto dir = scratch("compare");
  write_text_file(dir / "hmm1.json", report_to_json(published::hmm1_report()));
  write_text_file(dir / "hmm2.json", report_to_json(published::hmm2_report()));
  REQUIRE(run("compare " + (dir / "hmm1.json").string() + " " + (dir / "hmm2.json").string() + " --format json",
              dir / "c.log") == 0);
  const auto doc = nlohmann::json::parse(read_text_file(dir / "c.log"));
  CHECK(doc.at("labels") == published::kConditions);
  const std::vector<double> want{0.0, 26.7, 11.1, 21.1, 8.5, 12.2};
  CHECK(doc.at("improvement_rate").get<std::vector<double>>() == want);

  EvaluationReport other({"neutral", "angry"});
  other.record(0, 0);
  other.record(1, 1);
  write_text_file(dir / "other.json", report_to_json(other));
  CHECK(run("compare " + (dir / "hmm1.json").string() + " " + (dir / "other.json").string(), dir / "m.log") == 3);
}

TEST_CASE("cli exit codes distinguish usage, data and numeric failures") {
  const auto dir = scratch("exit_codes");
  CHECK(run("", dir / "a.log") == 2);
  CHECK(run("train --manifest", dir / "b.log") == 2);
  CHECK(run("train --manifest /nonexistent.tsv --out x", dir / "c.log") == 2);
  CHECK(run("--help", dir / "d.log") == 0);

  write_text_file(dir / "bad.tsv", "speaker\tsentence\n");
  CHECK(run("train --manifest " + (dir / "bad.tsv").string() + " --out " + (dir / "bank").string(), dir / "e.log") == 3);

  // A bank of one-state models and an utterance far outside every density.
  std::vector<AnyModel> models;
  for (double mu : {0.0, 1.0}) {
    Hmm2Model m;
    m.initial = {1.0};
    m.first_step = {1.0};
    m.transitions = {1.0};
    GaussianMixture g(1, 1);
    g.means = {mu};
    m.states = {g};
    models.emplace_back(m);
  }
  std::vector<ConditionBank> banks{ConditionBank({"a", "b"}, models)};
  save_banks(dir / "bank1", banks);
  save_features(dir / "far.lpcc", FeatureSequence(3, 1, {1e200, 1e200, 1e200}));
  CHECK(run("identify --bank " + (dir / "bank1").string() + " --features " + (dir / "far.lpcc").string(),
            dir / "f.log") == 4);
}
