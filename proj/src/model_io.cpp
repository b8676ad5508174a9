#include "hmm2/model_io.hpp"

#include <json.hpp>

#include <fmt/format.h>

#include "hmm2/error.hpp"
#include "hmm2/feature_io.hpp"

namespace hmm2 {

using nlohmann::json;

namespace {

json matrix(const std::vector<double>& values, std::size_t rows, std::size_t cols) {
  json out = json::array();
  for (std::size_t r = 0; r < rows; ++r)
    out.push_back(std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(r * cols),
                                      values.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols)));
  return out;
}

json mixtures_json(const std::vector<GaussianMixture>& states) {
  json out = json::array();
  for (const auto& s : states) {
    out.push_back({{"weights", s.weights},
                   {"means", matrix(s.means, s.components(), s.dim)},
                   {"variances", matrix(s.variances, s.components(), s.dim)}});
  }
  return out;
}

json header(int order, Topology topology, const std::vector<GaussianMixture>& states,
            const std::map<std::string, std::string>& metadata) {
  return {{"format_version", kModelFormatVersion},
          {"order", order},
          {"N", states.size()},
          {"M", states.empty() ? 0 : states.front().components()},
          {"D", states.empty() ? 0 : states.front().dim},
          {"topology", std::string(to_string(topology))},
          {"metadata", metadata}};
}

std::vector<double> flatten(const json& value, std::size_t rows, std::size_t cols, const char* what) {
  if (!value.is_array() || value.size() != rows) throw FormatError(fmt::format("'{}' has wrong shape", what));
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& row : value) {
    if (!row.is_array() || row.size() != cols) throw FormatError(fmt::format("'{}' has wrong shape", what));
    for (const auto& v : row) out.push_back(v.get<double>());
  }
  return out;
}

std::vector<double> vector_of(const json& value, std::size_t size, const char* what) {
  if (!value.is_array() || value.size() != size) throw FormatError(fmt::format("'{}' has wrong shape", what));
  return value.get<std::vector<double>>();
}

std::vector<GaussianMixture> parse_mixtures(const json& value, std::size_t n, std::size_t m, std::size_t d) {
  if (!value.is_array() || value.size() != n) throw FormatError("'mixtures' must hold one entry per state");
  std::vector<GaussianMixture> out;
  for (const auto& entry : value) {
    GaussianMixture gmm(m, d);
    gmm.weights = vector_of(entry.at("weights"), m, "weights");
    gmm.means = flatten(entry.at("means"), m, d, "means");
    gmm.variances = flatten(entry.at("variances"), m, d, "variances");
    out.push_back(std::move(gmm));
  }
  return out;
}

}  // namespace

std::string model_to_json(const Hmm1Model& model) {
  const std::size_t n = model.num_states();
  json doc = header(1, model.topology, model.states, model.metadata);
  doc["psi"] = model.initial;
  doc["a2"] = matrix(model.transitions, n, n);
  doc["mixtures"] = mixtures_json(model.states);
  return doc.dump(1) + "\n";
}

std::string model_to_json(const Hmm2Model& model) {
  const std::size_t n = model.num_states();
  json doc = header(2, model.topology, model.states, model.metadata);
  doc["psi"] = model.initial;
  doc["a2"] = matrix(model.first_step, n, n);
  json a3 = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> slab(model.transitions.begin() + static_cast<std::ptrdiff_t>(i * n * n),
                             model.transitions.begin() + static_cast<std::ptrdiff_t>((i + 1) * n * n));
    a3.push_back(matrix(slab, n, n));
  }
  doc["a3"] = std::move(a3);
  doc["mixtures"] = mixtures_json(model.states);
  return doc.dump(1) + "\n";
}

std::string model_to_json(const AnyModel& model) {
  return std::visit([](const auto& m) { return model_to_json(m); }, model);
}

AnyModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(fmt::format("model file is not valid JSON: {}", e.what()));
  }
  try {
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw FormatError(fmt::format("unsupported model format version {}", version));
    const int order = doc.at("order").get<int>();
    const auto n = doc.at("N").get<std::size_t>();
    const auto m = doc.at("M").get<std::size_t>();
    const auto d = doc.at("D").get<std::size_t>();
    const Topology topology = parse_topology(doc.at("topology").get<std::string>());
    std::map<std::string, std::string> metadata;
    if (doc.contains("metadata")) metadata = doc.at("metadata").get<std::map<std::string, std::string>>();

    if (order == 1) {
      Hmm1Model model;
      model.topology = topology;
      model.initial = vector_of(doc.at("psi"), n, "psi");
      model.transitions = flatten(doc.at("a2"), n, n, "a2");
      model.states = parse_mixtures(doc.at("mixtures"), n, m, d);
      model.metadata = std::move(metadata);
      model.validate();
      return model;
    }
    if (order == 2) {
      Hmm2Model model;
      model.topology = topology;
      model.initial = vector_of(doc.at("psi"), n, "psi");
      model.first_step = flatten(doc.at("a2"), n, n, "a2");
      const json& a3 = doc.at("a3");
      if (!a3.is_array() || a3.size() != n) throw FormatError("'a3' has wrong shape");
      for (const auto& slab : a3) {
        const auto flat = flatten(slab, n, n, "a3");
        model.transitions.insert(model.transitions.end(), flat.begin(), flat.end());
      }
      model.states = parse_mixtures(doc.at("mixtures"), n, m, d);
      model.metadata = std::move(metadata);
      model.validate();
      return model;
    }
    throw FormatError(fmt::format("unsupported model order {}", order));
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("malformed model file: {}", e.what()));
  } catch (const DataError& e) {
    throw FormatError(fmt::format("invalid model parameters: {}", e.what()));
  }
}

void save_model(const std::filesystem::path& path, const AnyModel& model) {
  write_text_file(path, model_to_json(model));
}

AnyModel load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace hmm2
