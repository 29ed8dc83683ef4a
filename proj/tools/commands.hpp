#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "acmia/acmia_scores.hpp"
#include "acmia/baselines.hpp"
#include "acmia/toy_lm.hpp"

namespace acmia::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kFidelityError = 3,
  kSplitOverlap = 4,
  kIoError = 5,
};

struct GridOptions {
  double log2_min = -3.0;
  double log2_max = 3.0;
  double log2_step = 0.1;
};

struct SimulateOptions {
  toy::SynthConfig synth;
  std::uint32_t order = 3;
  double beta = 0.1;
  double calibration_fraction = 0.5;
  bool emit_lossgrid = false;
  GridOptions grid;
  double delta = 0.01;
  std::filesystem::path out_dir;
};

struct AttackOptions {
  std::string attack = "ac";
  AcmiaParams acmia;
  BaselineParams baseline;
  std::optional<std::filesystem::path> frequencies;
  std::optional<std::uint32_t> vocab_size;
  std::optional<std::filesystem::path> reference_traces;
  std::optional<std::filesystem::path> lowercase_traces;
};

struct ScoreOptions {
  std::filesystem::path traces;
  AttackOptions attack;
  std::optional<std::filesystem::path> tune_report;
  std::optional<std::filesystem::path> split;
  std::optional<std::string> subset;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::filesystem::path out;
};

struct TuneOptions {
  std::filesystem::path traces;
  std::optional<std::filesystem::path> split;
  std::optional<std::filesystem::path> eval_traces;
  AttackOptions attack;
  GridOptions grid;
  std::vector<double> k_grid{5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::filesystem::path out;
};

struct EvalOptions {
  std::filesystem::path scores;
  std::filesystem::path out;
  std::optional<std::filesystem::path> roc_csv;
  std::optional<std::filesystem::path> density_csv;
  int bins = 20;
  std::string normalization = "zscore";
  std::optional<std::uint64_t> seed;
};

struct DecideOptions {
  std::filesystem::path scores;
  double lambda = 0.0;
  std::filesystem::path out;
};

struct OverlapOptions {
  std::filesystem::path traces;
  std::optional<std::filesystem::path> members;
  std::size_t n = 7;
  std::filesystem::path out;
};

// Each command writes its artifacts, prints diagnostics to `err`, and
// returns an ExitCode.
int run_simulate(const SimulateOptions& options, std::ostream& err);
int run_score(const ScoreOptions& options, std::ostream& err);
int run_tune(const TuneOptions& options, std::ostream& err);
int run_eval(const EvalOptions& options, std::ostream& err);
int run_decide(const DecideOptions& options, std::ostream& err);
int run_overlap(const OverlapOptions& options, std::ostream& err);

}  // namespace acmia::cli
