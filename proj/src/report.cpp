#include <algorithm>

#include <json.hpp>

#include <fmt/format.h>

#include "hmm2/classifier.hpp"
#include "hmm2/error.hpp"

namespace hmm2 {

using nlohmann::json;

namespace {

constexpr int kReportFormatVersion = 1;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json counts_json(const ConfusionMatrix& cm) {
  json rows = json::array();
  for (std::size_t p = 0; p < cm.size(); ++p) {
    std::vector<std::size_t> row;
    for (std::size_t t = 0; t < cm.size(); ++t) row.push_back(cm.count(p, t));
    rows.push_back(row);
  }
  return rows;
}

json rates_json(const ConfusionMatrix& cm) {
  json rates = json::array();
  for (std::size_t t = 0; t < cm.size(); ++t) rates.push_back(optional_json(cm.rate(t)));
  return rates;
}

ConfusionMatrix counts_from_json(const json& rows, const std::vector<std::string>& labels) {
  ConfusionMatrix cm(labels);
  if (!rows.is_array() || rows.size() != labels.size()) throw FormatError("report counts have wrong shape");
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const auto& row = rows[p];
    if (!row.is_array() || row.size() != labels.size()) throw FormatError("report counts have wrong shape");
    for (std::size_t t = 0; t < labels.size(); ++t) cm.add(p, t, row[t].get<std::size_t>());
  }
  return cm;
}

std::string percent_cell(const std::optional<double>& v) {
  return v ? fmt::format("{:.1f}%", round_to_tenth(*v)) : std::string("-");
}

std::size_t label_width(const std::vector<std::string>& labels, std::string_view heading) {
  std::size_t w = heading.size();
  for (const auto& l : labels) w = std::max(w, l.size());
  return w + 2;
}

std::size_t column_width(const std::vector<std::string>& names) {
  std::size_t w = 8;
  for (const auto& n : names) w = std::max(w, n.size() + 2);
  return w;
}

}  // namespace

std::string report_to_json(const EvaluationReport& report) {
  const auto& cm = report.confusion;
  json percentages = json::array();
  for (std::size_t p = 0; p < cm.size(); ++p) {
    json row = json::array();
    for (std::size_t t = 0; t < cm.size(); ++t) row.push_back(optional_json(cm.percentage(p, t)));
    percentages.push_back(row);
  }
  std::vector<std::size_t> utterances;
  for (std::size_t t = 0; t < cm.size(); ++t) utterances.push_back(cm.column_total(t));

  json groups = json::array();
  for (std::size_t g = 0; g < report.groups.size(); ++g) {
    groups.push_back({{"name", report.groups[g]},
                      {"counts", counts_json(report.group_confusion[g])},
                      {"rates", rates_json(report.group_confusion[g])}});
  }

  json doc = {{"format_version", kReportFormatVersion},
              {"orientation", "rows are evaluated (predicted) conditions, columns are portrayed (true) conditions"},
              {"labels", cm.labels()},
              {"counts", counts_json(cm)},
              {"percentages", percentages},
              {"utterances", utterances},
              {"rates", rates_json(cm)},
              {"groups", groups},
              {"protocol",
               {{"order", report.protocol.order},
                {"scoring", report.protocol.scoring},
                {"bank_scope", report.protocol.bank_scope},
                {"states", report.protocol.states},
                {"mixtures", report.protocol.mixtures},
                {"topology", report.protocol.topology}}}};
  return doc.dump(1) + "\n";
}

EvaluationReport report_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format_version").get<int>() != kReportFormatVersion)
      throw FormatError("unsupported report format version");
    const auto labels = doc.at("labels").get<std::vector<std::string>>();
    EvaluationReport report;
    report.confusion = counts_from_json(doc.at("counts"), labels);
    for (const auto& g : doc.at("groups")) {
      report.groups.push_back(g.at("name").get<std::string>());
      report.group_confusion.push_back(counts_from_json(g.at("counts"), labels));
    }
    const auto& p = doc.at("protocol");
    report.protocol.order = p.at("order").get<int>();
    report.protocol.scoring = p.at("scoring").get<std::string>();
    report.protocol.bank_scope = p.at("bank_scope").get<std::string>();
    report.protocol.states = p.at("states").get<std::size_t>();
    report.protocol.mixtures = p.at("mixtures").get<std::size_t>();
    report.protocol.topology = p.at("topology").get<std::string>();
    return report;
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("malformed report: {}", e.what()));
  }
}

std::string render_report_text(const EvaluationReport& report) {
  const auto& cm = report.confusion;
  const auto& labels = cm.labels();
  std::string out;

  out += fmt::format("TALKING CONDITION IDENTIFICATION PERFORMANCE (HMM{}, {} scoring, {} banks)\n",
                     report.protocol.order, report.protocol.scoring, report.protocol.bank_scope);
  std::vector<std::string> columns = report.groups;
  columns.push_back("Average");
  const std::size_t lw = label_width(labels, "Talking condition");
  const std::size_t cw = column_width(columns);
  out += fmt::format("{:<{}}", "Talking condition", lw);
  for (const auto& c : columns) out += fmt::format("{:>{}}", c, cw);
  out += '\n';
  for (std::size_t t = 0; t < labels.size(); ++t) {
    out += fmt::format("{:<{}}", labels[t], lw);
    for (const auto& g : report.group_confusion) out += fmt::format("{:>{}}", percent_cell(g.rate(t)), cw);
    out += fmt::format("{:>{}}", percent_cell(cm.rate(t)), cw);
    out += '\n';
  }

  out += "\nCONFUSION MATRIX (rows: evaluated as; columns: portrayed as; each column sums to 100%)\n";
  const std::size_t mw = label_width(labels, "Model");
  const std::size_t pw = column_width(labels);
  out += fmt::format("{:<{}}", "Model", mw);
  for (const auto& l : labels) out += fmt::format("{:>{}}", l, pw);
  out += '\n';
  for (std::size_t p = 0; p < labels.size(); ++p) {
    out += fmt::format("{:<{}}", labels[p], mw);
    for (std::size_t t = 0; t < labels.size(); ++t) out += fmt::format("{:>{}}", percent_cell(cm.percentage(p, t)), pw);
    out += '\n';
  }
  out += fmt::format("{:<{}}", "Utterances", mw);
  for (std::size_t t = 0; t < labels.size(); ++t) out += fmt::format("{:>{}}", cm.column_total(t), pw);
  out += '\n';
  return out;
}

std::string improvement_to_json(const ImprovementTable& table) {
  json doc = {{"labels", table.labels}, {"improvement_rate", table.rates}};
  return doc.dump(1) + "\n";
}

std::string render_improvement_text(const ImprovementTable& table) {
  std::string out = "AVERAGE IMPROVEMENT RATE (%)\n";
  const std::size_t cw = column_width(table.labels);
  out += fmt::format("{:<8}", "Model");
  for (const auto& l : table.labels) out += fmt::format("{:>{}}", l, cw);
  out += '\n';
  out += fmt::format("{:<8}", "%");
  for (double r : table.rates) out += fmt::format("{:>{}.1f}", r, cw);
  out += '\n';
  return out;
}

}  // namespace hmm2
