#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "acmia/baselines.hpp"
#include "acmia/calibrate.hpp"
#include "acmia/metrics.hpp"
#include "acmia/toy_lm.hpp"
#include "acmia/trace.hpp"

namespace acmia::io {

inline constexpr std::string_view kToolName = "acmia";
inline constexpr std::string_view kToolVersion = "0.1.0";

// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits by hash_hex.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::uint64_t hash);

// Whole-file helpers. Throw Error(Io).
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// --- JSONL traces ----------------------------------------------------------

nlohmann::json trace_to_json(const SampleTrace& trace);
// Parses and validates one record. Throws Parse or any validate_trace error.
SampleTrace trace_from_json(const nlohmann::json& record);

std::string write_traces_jsonl(const std::vector<SampleTrace>& traces);
void write_traces_jsonl(const std::filesystem::path& path, const std::vector<SampleTrace>& traces);
// Blank lines are skipped. Errors carry the 1-based line number.
std::vector<SampleTrace> read_traces_jsonl(std::istream& in);
std::vector<SampleTrace> read_traces_jsonl(const std::filesystem::path& path);

// --- CSV -------------------------------------------------------------------

// Splits one CSV record, honoring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_field(std::string_view value);

// `id,label,score`; unlabeled rows have an empty label.
std::string write_scores_csv(const ScoreSet& scores);
ScoreSet read_scores_csv(std::istream& in);
ScoreSet read_scores_csv(const std::filesystem::path& path);

// `id,split`.
std::string write_split_csv(const std::vector<std::pair<std::string, Split>>& rows);
std::unordered_map<std::string, Split> read_split_csv(const std::filesystem::path& path);

// `token_id,count`; ids outside [0, vocab_size) are rejected (VocabMismatch).
std::string write_counts_csv(const std::vector<std::uint64_t>& counts);
FrequencyTable read_frequency_csv(const std::filesystem::path& path, std::uint32_t vocab_size);

// `id,verdict`.
std::string write_verdicts_csv(const ScoreSet& scores, const std::vector<int>& verdicts);
// `fpr,tpr`.
std::string write_roc_csv(const std::vector<RocPoint>& points);
// `bin_left,bin_right,density_member,density_nonmember`.
std::string write_density_csv(const DensityTable& table);
// `id,label,overlap`.
std::string write_overlap_csv(const std::vector<std::tuple<std::string, Label, double>>& rows);

// --- JSON reports ------------------------------------------------------------

struct ReportHeader {
  std::string config_hash;
  std::optional<std::uint64_t> seed;
};

nlohmann::json header_json(const ReportHeader& header);
std::string dump_report(const nlohmann::json& report);

nlohmann::json tune_result_json(const TuneResult& result);
TuneResult tune_result_from_json(const nlohmann::json& report);

nlohmann::json roc_report_json(const RocReport& report);
RocReport roc_report_from_json(const nlohmann::json& report);

nlohmann::json chain_json(const toy::MarkovChain& chain, const toy::SynthConfig& config);

}  // namespace acmia::io
