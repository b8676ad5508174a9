#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmm2/corpus.hpp"
#include "hmm2/error.hpp"
#include "hmm2/model_io.hpp"
#include "hmm2/synth.hpp"
#include "hmm2/trellis.hpp"

using namespace hmm2;

namespace {

std::string nine_tokens(const std::string& speaker, const std::string& condition, int count = 9) {
  std::string out;
  for (int t = 1; t <= count; ++t)
    out += speaker + "\ts1\t" + condition + "\t" + std::to_string(t) + "\t" + condition + std::to_string(t) + ".wav\n";
  return out;
}

}  // namespace

TEST_CASE("parse_manifest reads a single row with every column") {
  const auto entries = parse_manifest(
      "speaker\tgroup\tsentence\tcondition\ttoken\tsplit\tpath\n"
      "spk1\tfemale\tsent3\tangry\t4\ttest\twav/a.wav\n");
  REQUIRE(entries.size() == 1);
  const auto& e = entries[0];
  CHECK(e.speaker == "spk1");
  CHECK(e.group == "female");
  CHECK(e.sentence == "sent3");
  CHECK(e.condition == "angry");
  CHECK(e.token == 4);
  CHECK(e.split == Split::kTest);
  CHECK(e.path == "wav/a.wav");
}

TEST_CASE("parse_manifest defaults, warnings and errors") {
  std::vector<std::string> warnings;
  const auto entries = parse_manifest("path\ttoken\tcondition\tsentence\tspeaker\tnote\nx.wav\t1\tfear\ts\tp\thello\n",
                                      &warnings);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].split == Split::kAuto);
  CHECK(entries[0].group.empty());
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("note") != std::string::npos);

  CHECK_THROWS_AS(parse_manifest(""), FormatError);
  CHECK_THROWS_AS(parse_manifest("speaker\tsentence\tcondition\ttoken\n"), FormatError);
  CHECK_THROWS_AS(parse_manifest("speaker\tsentence\tcondition\ttoken\tpath\np\ts\tc\tzero\tx\n"), FormatError);
  try {
    parse_manifest(
        "speaker\tsentence\tcondition\ttoken\tpath\n"
        "p\ts\tc\t1\tx.wav\n"
        "p\ts\tc\t1\ty.wav\n");
    FAIL("duplicate key accepted");
  } catch (const FormatError& e) {
    const std::string what = e.what();
    CHECK(what.find("duplicates") != std::string::npos);
    CHECK(what.find("'c'") != std::string::npos);
  }
}

TEST_CASE("format_manifest round-trips") {
  const std::string header = "speaker\tsentence\tcondition\ttoken\tpath\n";
  const auto entries = parse_manifest(header + nine_tokens("p", "neutral", 3));
  CHECK(parse_manifest(format_manifest(entries)) == entries);
}

TEST_CASE("split protocol: first five train, next four test") {
  const std::string header = "speaker\tsentence\tcondition\ttoken\tpath\n";
  const auto entries = apply_split_protocol(parse_manifest(header + nine_tokens("p", "neutral") + nine_tokens("p", "fear")));
  for (const auto& e : entries) CHECK(e.split == (e.token <= 5 ? Split::kTrain : Split::kTest));

  CHECK_THROWS_AS(apply_split_protocol(parse_manifest(header + nine_tokens("p", "loud", 8))), DataError);

  const auto extra = apply_split_protocol(parse_manifest(header + nine_tokens("p", "loud", 11)));
  CHECK(std::count_if(extra.begin(), extra.end(), [](const auto& e) { return e.split == Split::kUnused; }) == 2);
}

TEST_CASE("split protocol: seeded shuffle is a reproducible partition") {
  const std::string header = "speaker\tsentence\tcondition\ttoken\tpath\n";
  const auto entries = parse_manifest(header + nine_tokens("p", "neutral") + nine_tokens("q", "neutral"));
  SplitOptions opt;
  opt.shuffle = true;
  opt.seed = 17;
  const auto a = apply_split_protocol(entries, opt);
  const auto b = apply_split_protocol(entries, opt);
  CHECK(a == b);
  for (const char* speaker : {"p", "q"}) {
    std::size_t train = 0;
    std::size_t test = 0;
    for (const auto& e : a) {
      if (e.speaker != speaker) continue;
      train += e.split == Split::kTrain;
      test += e.split == Split::kTest;
    }
    CHECK(train == 5);
    CHECK(test == 4);
  }
  bool differs = false;
  for (const auto& e : a) differs |= (e.split == Split::kTrain) != (e.token <= 5);
  CHECK(differs);
}

TEST_CASE("split protocol keeps explicit assignments") {
  const auto entries = parse_manifest(
      "speaker\tsentence\tcondition\ttoken\tsplit\tpath\n"
      "p\ts\tc\t1\ttest\ta\n"
      "p\ts\tc\t2\ttrain\tb\n");
  CHECK(apply_split_protocol(entries) == entries);
}

TEST_CASE("synthetic corpus counts and layout") {
  auto spec = make_synth_spec({"neutral", "angry"}, 3);
  spec.tokens = 9;
  spec.min_frames = spec.max_frames = 50;
  const auto corpus = generate_synthetic_corpus(spec);
  CHECK(corpus.features.size() == 18);
  CHECK(corpus.manifest.size() == 18);
  CHECK(corpus.true_models.size() == 2);
  for (const auto& f : corpus.features) {
    CHECK(f.frames() == 50);
    CHECK(f.dim() == 16);
  }
  std::set<std::string> paths;
  for (const auto& e : corpus.manifest) paths.insert(e.path);
  CHECK(paths.size() == 18);
}

TEST_CASE("synthetic generation is deterministic and frame lengths stay in range") {
  auto spec = make_synth_spec({"a", "b", "c"}, 9);
  spec.tokens = 4;
  const auto x = generate_synthetic_corpus(spec);
  const auto y = generate_synthetic_corpus(spec);
  for (std::size_t i = 0; i < x.features.size(); ++i) {
    CHECK(x.features[i] == y.features[i]);
    CHECK(x.features[i].frames() >= spec.min_frames);
    CHECK(x.features[i].frames() <= spec.max_frames);
  }
}

TEST_CASE("zero separation with shared seeds gives identical models") {
  auto spec = make_synth_spec({"a", "b"}, 5);
  spec.separation = 0.0;
  spec.conditions[1].seed = spec.conditions[0].seed;
  CHECK(model_to_json(make_condition_model(spec, 0)) == model_to_json(make_condition_model(spec, 1)));
  spec.separation = 4.0;
  CHECK(model_to_json(make_condition_model(spec, 0)) != model_to_json(make_condition_model(spec, 1)));
}

TEST_CASE("condition mean offsets are separated by the requested distance") {
  auto spec = make_synth_spec({"a", "b", "c", "d"}, 5);
  spec.separation = 4.0;
  std::vector<Hmm2Model> models;
  for (std::size_t c = 0; c < 4; ++c) models.push_back(make_condition_model(spec, c));
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = a + 1; b < 4; ++b) {
      // Every component is shifted by the same per-condition offset.
      double dist = 0.0;
      for (std::size_t d = 0; d < spec.dim; ++d) {
        const double diff = models[a].states[0].means[d] - models[b].states[0].means[d];
        dist += diff * diff;
      }
      CHECK(std::sqrt(dist) >= 4.0 - 1e-12);
    }
}

TEST_CASE("second-order generator hides its structure from first-order statistics") {
  auto spec = make_synth_spec({"a"}, 2);
  const auto m = make_condition_model(spec, 0);
  const std::size_t n = m.num_states();
  // With uniform psi and first step, the pair (q_{t-1}, q_t) is uniform and
  // so is P(q_{t+1} | q_t).
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      double p = 0.0;
      for (std::size_t i = 0; i < n; ++i) p += m.a3(i, j, k) / static_cast<double>(n);
      CHECK(p == doctest::Approx(1.0 / static_cast<double>(n)).epsilon(1e-12));
    }
  bool depends_on_i = false;
  for (std::size_t k = 0; k < n; ++k) depends_on_i |= m.a3(0, 0, k) != m.a3(1, 0, k);
  CHECK(depends_on_i);
}

TEST_CASE("synthetic spec JSON round-trip and validation") {
  auto spec = make_synth_spec({"x", "y"}, 4);
  spec.separation = 2.5;
  spec.transitions = TransitionKind::kFirstOrder;
  const auto back = synth_spec_from_json(synth_spec_to_json(spec));
  CHECK(synth_spec_to_json(back) == synth_spec_to_json(spec));
  CHECK(back.conditions[1].seed == spec.conditions[1].seed);

  spec.tokens = 1;
  CHECK_THROWS_AS(spec.validate(), DataError);
  CHECK_THROWS_AS(synth_spec_from_json(R"({"conditions": ["a", "a"]})"), DataError);
  CHECK_THROWS(synth_spec_from_json(R"({"conditions": ["a"], "transitions": "third-order"})"));
}
