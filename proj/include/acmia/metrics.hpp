#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "acmia/trace.hpp"

namespace acmia {

struct ScoreEntry {
  std::string id;
  double score = 0.0;
  Label label = Label::unlabeled;

  bool operator==(const ScoreEntry&) const = default;
};

using ScoreSet = std::vector<ScoreEntry>;

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  bool operator==(const RocPoint&) const = default;
};

struct RocReport {
  std::vector<RocPoint> points;
  double auroc = 0.5;
  double tpr_at_5fpr = 0.0;
  double fpr_at_95tpr = 1.0;
  std::size_t n_members = 0;
  std::size_t n_nonmembers = 0;
  std::size_t n_unlabeled = 0;
};

// Threshold sweep from "nobody is a member" to "everybody is a member",
// placing one threshold at each distinct labeled score. Unlabeled entries are
// ignored. Throws DegenerateLabels or InvalidArgument (non-finite score).
std::vector<RocPoint> roc_points(const ScoreSet& scores);

// Mann-Whitney: P(member > nonmember) + 0.5 * P(tie).
double auroc(const ScoreSet& scores);

// Largest TPR among thresholds with FPR <= fpr_cap (step function).
double tpr_at_fpr(const ScoreSet& scores, double fpr_cap = 0.05);

// Smallest FPR among thresholds with TPR >= tpr_floor (step function).
double fpr_at_tpr(const ScoreSet& scores, double tpr_floor = 0.95);

RocReport roc_report(const ScoreSet& scores);

// 1 (member) iff score >= lambda.
std::vector<int> decide(const ScoreSet& scores, double lambda);

enum class Normalization { zscore, minmax };
Normalization parse_normalization(const std::string& text);
std::string to_string(Normalization normalization);

struct DensityBin {
  double left = 0.0;
  double right = 0.0;
  double density_member = 0.0;
  double density_nonmember = 0.0;
};

struct DensityTable {
  Normalization normalization = Normalization::zscore;
  std::vector<DensityBin> bins;
  // Mean normalized member score minus mean normalized non-member score.
  double mean_gap = 0.0;
};

// Normalizes the labeled scores, then bins each class into a density that
// integrates to 1. Throws DegenerateScores (< 2 distinct values),
// DegenerateLabels or InvalidArgument (bins < 1).
DensityTable export_density(const ScoreSet& scores, int bins, Normalization normalization);

}  // namespace acmia
