#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mmpoison/error.hpp"
#include "mmpoison/harness.hpp"

namespace mmpoison {

namespace {

constexpr const char* kCsvHeader =
    "setup,eval_mode,image_mode,r_orig,r_pois,acc_orig,acc_pois,acc_orig_all";

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string full(const std::optional<double>& v) { return v ? full(*v) : std::string(); }

std::string percent(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  return fields;
}

std::optional<double> parse_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError("report csv: '" + s + "' is not a number");
  }
}

std::string pad(const std::string& s, std::size_t width, bool left) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return left ? s + fill : fill + s;
}

}  // namespace

ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::kCsv;
  if (s == "table") return ReportFormat::kTable;
  if (s == "json") return ReportFormat::kJson;
  throw ConfigError("unknown report format '" + std::string(s) + "' (expected csv, table or json)");
}

std::string render_report(std::span<const EvalReport> reports, ReportFormat format) {
  if (reports.empty()) throw ContractError("no reports to render");
  std::ostringstream out;
  switch (format) {
    case ReportFormat::kCsv: {
      out << kCsvHeader << "\n";
      for (const auto& r : reports) {
        const auto& a = r.aggregates;
        out << csv_field(r.setup) << ',' << to_string(r.eval_mode) << ',' << r.image_mode << ','
            << full(a.r_orig) << ',' << full(a.r_pois) << ',' << full(a.acc_orig) << ','
            << full(a.acc_pois) << ',' << full(a.acc_orig_all) << "\n";
      }
      break;
    }
    case ReportFormat::kTable: {
      const std::vector<std::string> columns = {"R_Orig", "R_Pois", "ACC_Orig", "ACC_Pois"};
      std::size_t setup_width = 5;
      for (const auto& r : reports) setup_width = std::max(setup_width, r.setup.size());
      out << pad("Setup", setup_width, true);
      for (const auto& c : columns) out << "  " << pad(c, 8, false);
      out << "\n" << std::string(setup_width + columns.size() * 10, '-') << "\n";
      for (const auto& r : reports) {
        const auto& a = r.aggregates;
        out << pad(r.setup, setup_width, true);
        for (const auto& v : {std::optional<double>(a.r_orig), a.r_pois,
                              std::optional<double>(a.acc_orig), a.acc_pois}) {
          out << "  " << pad(percent(v), 8, false);
        }
        out << "\n";
      }
      break;
    }
    case ReportFormat::kJson: {
      nlohmann::json array = nlohmann::json::array();
      for (const auto& r : reports) array.push_back(nlohmann::json::parse(report_to_json(r)));
      out << array.dump(2) << "\n";
      break;
    }
  }
  return out.str();
}

std::vector<EvalReport> reports_from_csv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw FormatError("report csv: unexpected header");
  }
  std::vector<EvalReport> reports;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw FormatError("report csv: expected 8 fields, got " +
                                         std::to_string(f.size()));
    EvalReport r;
    r.setup = f[0];
    r.eval_mode = parse_eval_mode(f[1]);
    r.image_mode = f[2];
    const auto r_orig = parse_optional(f[3]);
    const auto acc_orig = parse_optional(f[5]);
    const auto acc_all = parse_optional(f[7]);
    if (!r_orig || !acc_orig || !acc_all) throw FormatError("report csv: missing required value");
    r.aggregates.r_orig = *r_orig;
    r.aggregates.r_pois = parse_optional(f[4]);
    r.aggregates.acc_orig = *acc_orig;
    r.aggregates.acc_pois = parse_optional(f[6]);
    r.aggregates.acc_orig_all = *acc_all;
    reports.push_back(std::move(r));
  }
  return reports;
}

void emit_report(std::span<const EvalReport> reports, ReportFormat format,
                 const std::filesystem::path& path) {
  const std::string text = render_report(reports, format);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

}  // namespace mmpoison
