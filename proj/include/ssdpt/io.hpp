#pragma once

#include <string>
#include <vector>

#include "ssdpt/dataset.hpp"
#include "ssdpt/evaluation.hpp"
#include "ssdpt/features.hpp"
#include "ssdpt/scoring.hpp"

namespace ssdpt {

// Feature file: 16-byte header — magic "LMEL", u32 version (1), u32 T,
// u32 F, all little-endian — followed by T*F doubles, row-major
// little-endian. A sidecar JSON manifest carries the clip metadata.
void save_feature(const std::string& path, const LogMelFeature& feat);
LogMelFeature load_feature(const std::string& path);

void save_feature_manifest(const std::string& path, const ClipMeta& meta);

// Score CSV with header clip_id,machine_type,section,domain,label,A_c,A_r,A,
// one row per clip, sorted by clip_id. Rows for clips that could not be
// scored carry the token "error" in the three score columns.
void save_scores_csv(const std::string& path, std::vector<ScoreRecord> records);
std::string scores_csv_string(std::vector<ScoreRecord> records);

// Reads a score CSV; unscored rows come back with valid == false.
std::vector<ScoreRecord> load_scores_csv(const std::string& path);

void save_report_json(const std::string& path, const EvalReport& report);

// Summary table: method,machine_type,h-AUC,h-pAUC with an "all" row first
// and one row per machine type.
void save_report_csv(const std::string& path, const EvalReport& report,
                     const std::string& method = "SSDPT");
std::string report_csv_string(const EvalReport& report,
                              const std::string& method = "SSDPT");

// Per-cell ROC points: machine_type,section,domain,fpr,tpr.
void save_roc_csv(const std::string& path,
                  const std::vector<ScoreRecord>& records);

}  // namespace ssdpt
