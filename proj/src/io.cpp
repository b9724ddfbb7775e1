#include "ssdpt/io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

namespace ssdpt {

namespace {

void write_u32(std::ofstream& out, uint32_t v) {
  const uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                        static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::ifstream& in) {
  uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (b[1] << 8) | (b[2] << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

std::string format_score(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

void save_feature(const std::string& path, const LogMelFeature& feat) {
  std::ofstream out(path, std::ios::binary);
  if (!out.is_open()) {
    throw std::runtime_error("save_feature: cannot open " + path);
  }
  out.write("LMEL", 4);
  write_u32(out, 1);
  write_u32(out, static_cast<uint32_t>(feat.frame_count()));
  write_u32(out, static_cast<uint32_t>(feat.band_count()));
  out.write(reinterpret_cast<const char*>(feat.values.data()),
            static_cast<std::streamsize>(feat.values.size() * sizeof(double)));
  if (!out.good()) {
    throw std::runtime_error("save_feature: write failed: " + path);
  }
}

LogMelFeature load_feature(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) {
    throw std::runtime_error("load_feature: cannot open " + path);
  }
  char magic[4];
  in.read(magic, 4);
  if (!in.good() || std::memcmp(magic, "LMEL", 4) != 0) {
    throw std::runtime_error("load_feature: bad magic in " + path);
  }
  const uint32_t version = read_u32(in);
  if (version != 1) {
    throw std::runtime_error("load_feature: unsupported version in " + path);
  }
  const uint32_t t = read_u32(in);
  const uint32_t f = read_u32(in);
  LogMelFeature feat;
  feat.values = Matrix(static_cast<int>(t), static_cast<int>(f));
  in.read(reinterpret_cast<char*>(feat.values.data()),
          static_cast<std::streamsize>(feat.values.size() * sizeof(double)));
  if (!in.good()) {
    throw std::runtime_error("load_feature: truncated data in " + path);
  }
  return feat;
}

void save_feature_manifest(const std::string& path, const ClipMeta& meta) {
  const nlohmann::json j = {{"clip_id", meta.clip_id},
                            {"machine_type", meta.machine_type},
                            {"section", meta.section},
                            {"domain", meta.domain},
                            {"label", meta.condition}};
  std::ofstream out(path);
  if (!out.is_open()) {
    throw std::runtime_error("save_feature_manifest: cannot open " + path);
  }
  out << j.dump(2) << "\n";
}

std::string scores_csv_string(std::vector<ScoreRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const ScoreRecord& a, const ScoreRecord& b) {
              return a.clip_id < b.clip_id;
            });
  std::ostringstream out;
  out << "clip_id,machine_type,section,domain,label,A_c,A_r,A\n";
  char section[8];
  for (const auto& r : records) {
    std::snprintf(section, sizeof(section), "%02d", r.section);
    out << r.clip_id << ',' << r.machine_type << ',' << section << ','
        << r.domain << ',' << r.label << ',';
    if (r.valid) {
      out << format_score(r.score_cls) << ',' << format_score(r.score_rec)
          << ',' << format_score(r.score_total) << '\n';
    } else {
      out << "error,error,error\n";
    }
  }
  return out.str();
}

void save_scores_csv(const std::string& path, std::vector<ScoreRecord> records) {
  std::ofstream out(path);
  if (!out.is_open()) {
    throw std::runtime_error("save_scores_csv: cannot open " + path);
  }
  out << scores_csv_string(std::move(records));
  if (!out.good()) {
    throw std::runtime_error("save_scores_csv: write failed: " + path);
  }
}

std::vector<ScoreRecord> load_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) {
    throw std::runtime_error("load_scores_csv: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_scores_csv: empty file " + path);
  }
  if (line != "clip_id,machine_type,section,domain,label,A_c,A_r,A") {
    throw std::runtime_error("load_scores_csv: unexpected header in " + path);
  }
  std::vector<ScoreRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      fields.push_back(field);
    }
    if (fields.size() != 8) {
      throw std::runtime_error("load_scores_csv: malformed line " +
                               std::to_string(line_no) + " in " + path);
    }
    ScoreRecord r;
    r.clip_id = fields[0];
    r.machine_type = fields[1];
    r.domain = fields[3];
    r.label = fields[4];
    try {
      r.section = std::stoi(fields[2]);
    } catch (const std::exception&) {
      throw std::runtime_error("load_scores_csv: bad section on line " +
                               std::to_string(line_no) + " in " + path);
    }
    if (fields[5] == "error" || fields[6] == "error" || fields[7] == "error") {
      r.valid = false;
      r.error = "unscored";
    } else {
      try {
        size_t used = 0;
        r.score_cls = std::stod(fields[5], &used);
        r.score_rec = std::stod(fields[6], &used);
        r.score_total = std::stod(fields[7], &used);
      } catch (const std::exception&) {
        throw std::runtime_error("load_scores_csv: bad score on line " +
                                 std::to_string(line_no) + " in " + path);
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

void save_report_json(const std::string& path, const EvalReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"machine_type", c.machine_type},
                     {"section", c.section},
                     {"domain", c.domain},
                     {"auc", c.auc},
                     {"pauc", c.pauc},
                     {"n_normal", c.n_normal},
                     {"n_anomaly", c.n_anomaly}});
  }
  nlohmann::json machines = nlohmann::json::array();
  for (const auto& m : report.machines) {
    machines.push_back({{"machine_type", m.machine_type},
                        {"h_auc", m.h_auc},
                        {"h_pauc", m.h_pauc}});
  }
  const nlohmann::json j = {{"p", report.p},
                            {"tie_policy", to_string(report.tie_policy)},
                            {"cells", cells},
                            {"machines", machines},
                            {"overall", {{"h_auc", report.h_auc},
                                         {"h_pauc", report.h_pauc}}}};
  std::ofstream out(path);
  if (!out.is_open()) {
    throw std::runtime_error("save_report_json: cannot open " + path);
  }
  out << j.dump(2) << "\n";
}

std::string report_csv_string(const EvalReport& report, const std::string& method) {
  std::ostringstream out;
  out << "method,machine_type,h-AUC,h-pAUC\n";
  out << method << ",all," << format_score(report.h_auc) << ','
      << format_score(report.h_pauc) << '\n';
  for (const auto& m : report.machines) {
    out << method << ',' << m.machine_type << ',' << format_score(m.h_auc)
        << ',' << format_score(m.h_pauc) << '\n';
  }
  return out.str();
}

void save_report_csv(const std::string& path, const EvalReport& report,
                     const std::string& method) {
  std::ofstream out(path);
  if (!out.is_open()) {
    throw std::runtime_error("save_report_csv: cannot open " + path);
  }
  out << report_csv_string(report, method);
}

void save_roc_csv(const std::string& path,
                  const std::vector<ScoreRecord>& records) {
  struct CellScores {
    std::vector<double> normal;
    std::vector<double> anomaly;
  };
  std::map<std::tuple<std::string, int, std::string>, CellScores> cells;
  for (const auto& r : records) {
    if (!r.valid || (r.label != "normal" && r.label != "anomaly")) {
      continue;
    }
    auto& cell = cells[{r.machine_type, r.section, r.domain}];
    (r.label == "anomaly" ? cell.anomaly : cell.normal).push_back(r.score_total);
  }
  std::ofstream out(path);
  if (!out.is_open()) {
    throw std::runtime_error("save_roc_csv: cannot open " + path);
  }
  out << "machine_type,section,domain,fpr,tpr\n";
  char section[8];
  for (const auto& [key, scores] : cells) {
    if (scores.normal.empty() || scores.anomaly.empty()) {
      continue;
    }
    std::snprintf(section, sizeof(section), "%02d", std::get<1>(key));
    for (const auto& [fpr, tpr] : roc_points(scores.anomaly, scores.normal)) {
      out << std::get<0>(key) << ',' << section << ',' << std::get<2>(key)
          << ',' << format_score(fpr) << ',' << format_score(tpr) << '\n';
    }
  }
}

}  // namespace ssdpt
