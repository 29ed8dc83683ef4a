#include "acmia/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acmia/error.hpp"

namespace acmia {
namespace {

struct Labeled {
  double score;
  bool member;
  const std::string* id;
};

// Labeled entries ordered by descending score, then id, so that reports do
// not depend on input order.
std::vector<Labeled> sorted_labeled(const ScoreSet& scores, std::size_t& members, std::size_t& nonmembers) {
  std::vector<Labeled> out;
  members = 0;
  nonmembers = 0;
  for (const auto& e : scores) {
    if (!std::isfinite(e.score)) throw Error(ErrorKind::InvalidArgument, "non-finite score for '" + e.id + "'");
    if (e.label == Label::unlabeled) continue;
    const bool is_member = e.label == Label::member;
    (is_member ? members : nonmembers) += 1;
    out.push_back({e.score, is_member, &e.id});
  }
  if (members == 0 || nonmembers == 0) {
    throw Error(ErrorKind::DegenerateLabels, "need at least one member and one non-member");
  }
  std::stable_sort(out.begin(), out.end(), [](const Labeled& a, const Labeled& b) {
    if (a.score != b.score) return a.score > b.score;
    return *a.id < *b.id;
  });
  return out;
}

}  // namespace

std::vector<RocPoint> roc_points(const ScoreSet& scores) {
  std::size_t members = 0;
  std::size_t nonmembers = 0;
  const auto sorted = sorted_labeled(scores, members, nonmembers);

  std::vector<RocPoint> points{{0.0, 0.0}};
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double threshold = sorted[i].score;
    // Equal scores cross the threshold together.
    while (i < sorted.size() && sorted[i].score == threshold) {
      (sorted[i].member ? tp : fp) += 1;
      ++i;
    }
    points.push_back({static_cast<double>(fp) / static_cast<double>(nonmembers),
                      static_cast<double>(tp) / static_cast<double>(members)});
  }
  return points;
}

double auroc(const ScoreSet& scores) {
  std::size_t members = 0;
  std::size_t nonmembers = 0;
  const auto sorted = sorted_labeled(scores, members, nonmembers);

  // Count (member, non-member) pairs won by the member, ties at half credit,
  // in integer arithmetic (doubled to keep the half).
  std::uint64_t twice_wins = 0;
  std::uint64_t nonmembers_below = nonmembers;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double value = sorted[i].score;
    std::uint64_t group_members = 0;
    std::uint64_t group_nonmembers = 0;
    while (i < sorted.size() && sorted[i].score == value) {
      (sorted[i].member ? group_members : group_nonmembers) += 1;
      ++i;
    }
    nonmembers_below -= group_nonmembers;
    twice_wins += group_members * (2 * nonmembers_below + group_nonmembers);
  }
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(members) * static_cast<double>(nonmembers));
}

double tpr_at_fpr(const ScoreSet& scores, double fpr_cap) {
  double best = 0.0;
  for (const auto& p : roc_points(scores)) {
    if (p.fpr <= fpr_cap) best = std::max(best, p.tpr);
  }
  return best;
}

double fpr_at_tpr(const ScoreSet& scores, double tpr_floor) {
  double best = 1.0;
  for (const auto& p : roc_points(scores)) {
    if (p.tpr >= tpr_floor) best = std::min(best, p.fpr);
  }
  return best;
}

RocReport roc_report(const ScoreSet& scores) {
  RocReport report;
  report.points = roc_points(scores);
  report.auroc = auroc(scores);
  report.tpr_at_5fpr = tpr_at_fpr(scores, 0.05);
  report.fpr_at_95tpr = fpr_at_tpr(scores, 0.95);
  for (const auto& e : scores) {
    if (e.label == Label::member) ++report.n_members;
    else if (e.label == Label::nonmember) ++report.n_nonmembers;
    else ++report.n_unlabeled;
  }
  return report;
}

std::vector<int> decide(const ScoreSet& scores, double lambda) {
  std::vector<int> verdicts;
  verdicts.reserve(scores.size());
  for (const auto& e : scores) verdicts.push_back(e.score >= lambda ? 1 : 0);
  return verdicts;
}

Normalization parse_normalization(const std::string& text) {
  if (text == "zscore") return Normalization::zscore;
  if (text == "minmax") return Normalization::minmax;
  throw Error(ErrorKind::Parse, "unknown normalization '" + text + "'");
}

std::string to_string(Normalization normalization) {
  return normalization == Normalization::zscore ? "zscore" : "minmax";
}

DensityTable export_density(const ScoreSet& scores, int bins, Normalization normalization) {
  if (bins < 1) throw Error(ErrorKind::InvalidArgument, "need at least one bin");
  std::vector<double> values;
  std::vector<bool> is_member;
  for (const auto& e : scores) {
    if (!std::isfinite(e.score)) throw Error(ErrorKind::InvalidArgument, "non-finite score for '" + e.id + "'");
    if (e.label == Label::unlabeled) continue;
    values.push_back(e.score);
    is_member.push_back(e.label == Label::member);
  }
  const std::size_t members = static_cast<std::size_t>(std::count(is_member.begin(), is_member.end(), true));
  const std::size_t nonmembers = is_member.size() - members;
  if (members == 0 || nonmembers == 0) {
    throw Error(ErrorKind::DegenerateLabels, "need at least one member and one non-member");
  }
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  if (*lo_it == *hi_it) throw Error(ErrorKind::DegenerateScores, "need at least two distinct scores");

  double offset = 0.0;
  double scale = 1.0;
  if (normalization == Normalization::minmax) {
    offset = *lo_it;
    scale = *hi_it - *lo_it;
  } else {
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    offset = mean;
    scale = std::sqrt(var / n);
  }
  for (double& v : values) v = (v - offset) / scale;

  DensityTable table;
  table.normalization = normalization;
  const auto [nlo, nhi] = std::minmax_element(values.begin(), values.end());
  const double lo = *nlo;
  const double hi = *nhi;
  const double width = (hi - lo) / bins;
  table.bins.resize(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    table.bins[static_cast<std::size_t>(b)].left = lo + width * b;
    table.bins[static_cast<std::size_t>(b)].right = (b + 1 == bins) ? hi : lo + width * (b + 1);
  }

  double member_sum = 0.0;
  double nonmember_sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto b = static_cast<std::size_t>(std::floor((values[i] - lo) / width));
    b = std::min(b, static_cast<std::size_t>(bins - 1));
    auto& bin = table.bins[b];
    if (is_member[i]) {
      bin.density_member += 1.0;
      member_sum += values[i];
    } else {
      bin.density_nonmember += 1.0;
      nonmember_sum += values[i];
    }
  }
  for (auto& bin : table.bins) {
    bin.density_member /= static_cast<double>(members) * width;
    bin.density_nonmember /= static_cast<double>(nonmembers) * width;
  }
  table.mean_gap = member_sum / static_cast<double>(members) - nonmember_sum / static_cast<double>(nonmembers);
  return table;
}

}  // namespace acmia
