#include "hmm2/bank_io.hpp"

#include <json.hpp>

#include <fmt/format.h>

#include "hmm2/error.hpp"
#include "hmm2/feature_io.hpp"

namespace hmm2 {

using nlohmann::json;

namespace {

std::string scope_dir(const BankScope& scope) {
  return scope.pooled() ? std::string("pooled") : fmt::format("{}__{}", scope.speaker, scope.sentence);
}

}  // namespace

void save_banks(const std::filesystem::path& root, const std::vector<ConditionBank>& banks) {
  std::filesystem::create_directories(root);
  json scopes = json::array();
  for (const auto& bank : banks) {
    const std::string dir = scope_dir(bank.scope());
    std::filesystem::create_directories(root / dir);
    json files = json::array();
    for (std::size_t i = 0; i < bank.size(); ++i) {
      const std::string rel = dir + "/" + bank.labels()[i] + ".json";
      save_model(root / rel, bank.model(i));
      files.push_back(rel);
    }
    scopes.push_back({{"speaker", bank.scope().speaker},
                      {"sentence", bank.scope().sentence},
                      {"labels", bank.labels()},
                      {"models", files}});
  }
  json doc = {{"format_version", 1}, {"order", banks.empty() ? 0 : banks.front().order()}, {"scopes", scopes}};
  write_text_file(root / "bank.json", doc.dump(1) + "\n");
}

std::vector<ConditionBank> load_banks(const std::filesystem::path& root) {
  const auto index_path = root / "bank.json";
  json doc;
  try {
    doc = json::parse(read_text_file(index_path));
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: {}", index_path.string(), e.what()));
  }
  std::vector<ConditionBank> banks;
  try {
    if (doc.at("format_version").get<int>() != 1) throw FormatError("unsupported bank index version");
    for (const auto& s : doc.at("scopes")) {
      auto labels = s.at("labels").get<std::vector<std::string>>();
      std::vector<AnyModel> models;
      for (const auto& f : s.at("models")) models.push_back(load_model(root / f.get<std::string>()));
      banks.emplace_back(std::move(labels), std::move(models),
                         BankScope{s.at("speaker").get<std::string>(), s.at("sentence").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: {}", index_path.string(), e.what()));
  }
  if (banks.empty()) throw DataError(fmt::format("{} lists no banks", index_path.string()));
  for (const auto& b : banks)
    if (b.order() != banks.front().order()) throw FormatError("bank directory mixes model orders");
  return banks;
}

const ConditionBank* find_bank(const std::vector<ConditionBank>& banks, const std::string& speaker,
                               const std::string& sentence) {
  for (const auto& b : banks) {
    if (b.scope().pooled()) return &b;
    if (b.scope().speaker == speaker && b.scope().sentence == sentence) return &b;
  }
  return nullptr;
}

}  // namespace hmm2
