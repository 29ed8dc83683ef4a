#include "acmia/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "acmia/error.hpp"

namespace acmia::io {

using nlohmann::json;

std::string format_double(double value) {
  std::array<char, 64> buffer{};
  const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), result.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[hash & 0xF];
    hash >>= 4;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

// --- traces ---

json trace_to_json(const SampleTrace& trace) {
  json record;
  record["id"] = trace.id;
  record["label"] = trace.label == Label::unlabeled ? json(nullptr) : json(std::string(to_string(trace.label)));
  record["fidelity"] = std::string(to_string(trace.fidelity));
  if (trace.text) record["text"] = *trace.text;
  json steps = json::array();
  for (const auto& step : trace.steps) {
    json s;
    s["token_id"] = step.token_id;
    if (step.logits) s["logits"] = *step.logits;
    if (step.chosen_logprob) s["chosen_logprob"] = *step.chosen_logprob;
    steps.push_back(std::move(s));
  }
  record["steps"] = std::move(steps);
  if (trace.loss_grid) {
    json grid = json::object();
    for (const auto& [tau, loss] : trace.loss_grid->points()) grid[format_double(tau)] = loss;
    record["loss_grid"] = std::move(grid);
  }
  return record;
}

namespace {

double parse_decimal(const std::string& text) {
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Parse, "'" + text + "' is not a decimal number");
  }
  return value;
}

double json_number(const json& value, const char* what) {
  if (!value.is_number()) throw Error(ErrorKind::Parse, std::string(what) + " must be a number");
  return value.get<double>();
}

}  // namespace

SampleTrace trace_from_json(const json& record) {
  if (!record.is_object()) throw Error(ErrorKind::Parse, "trace record must be a JSON object");
  SampleTrace trace;
  if (!record.contains("id") || !record["id"].is_string()) throw Error(ErrorKind::Parse, "trace needs a string id");
  trace.id = record["id"].get<std::string>();

  if (record.contains("label") && !record["label"].is_null()) {
    if (!record["label"].is_string()) throw Error(ErrorKind::Parse, "label must be a string or null");
    const auto label = record["label"].get<std::string>();
    if (label != "member" && label != "nonmember") {
      throw Error(ErrorKind::Parse, "label must be \"member\", \"nonmember\" or null");
    }
    trace.label = parse_label(label);
  }
  if (!record.contains("fidelity") || !record["fidelity"].is_string()) {
    throw Error(ErrorKind::Parse, "trace '" + trace.id + "' needs a fidelity");
  }
  trace.fidelity = parse_fidelity(record["fidelity"].get<std::string>());
  if (record.contains("text") && !record["text"].is_null()) {
    if (!record["text"].is_string()) throw Error(ErrorKind::Parse, "text must be a string");
    trace.text = record["text"].get<std::string>();
  }
  if (!record.contains("steps") || !record["steps"].is_array()) {
    throw Error(ErrorKind::Parse, "trace '" + trace.id + "' needs a steps array");
  }
  for (const auto& s : record["steps"]) {
    TokenStep step;
    if (!s.is_object() || !s.contains("token_id") || !s["token_id"].is_number_integer() ||
        s["token_id"].get<std::int64_t>() < 0 || s["token_id"].get<std::int64_t>() > 0xFFFFFFFFLL) {
      throw Error(ErrorKind::Parse, "trace '" + trace.id + "' step needs a non-negative integer token_id");
    }
    step.token_id = static_cast<std::uint32_t>(s["token_id"].get<std::int64_t>());
    if (s.contains("logits") && !s["logits"].is_null()) {
      if (!s["logits"].is_array()) throw Error(ErrorKind::Parse, "logits must be an array");
      std::vector<double> logits;
      logits.reserve(s["logits"].size());
      for (const auto& z : s["logits"]) logits.push_back(json_number(z, "logit"));
      step.logits = std::move(logits);
    }
    if (s.contains("chosen_logprob") && !s["chosen_logprob"].is_null()) {
      step.chosen_logprob = json_number(s["chosen_logprob"], "chosen_logprob");
    }
    trace.steps.push_back(std::move(step));
  }
  if (record.contains("loss_grid") && !record["loss_grid"].is_null()) {
    if (!record["loss_grid"].is_object()) throw Error(ErrorKind::Parse, "loss_grid must be an object");
    LossGrid grid;
    for (const auto& [key, value] : record["loss_grid"].items()) {
      grid.set(parse_decimal(key), json_number(value, "loss_grid value"));
    }
    trace.loss_grid = std::move(grid);
  }
  return validate_trace(std::move(trace));
}

std::string write_traces_jsonl(const std::vector<SampleTrace>& traces) {
  std::string out;
  for (const auto& t : traces) {
    out += trace_to_json(t).dump();
    out.push_back('\n');
  }
  return out;
}

void write_traces_jsonl(const std::filesystem::path& path, const std::vector<SampleTrace>& traces) {
  write_file(path, write_traces_jsonl(traces));
}

std::vector<SampleTrace> read_traces_jsonl(std::istream& in) {
  std::vector<SampleTrace> traces;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      traces.push_back(trace_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return traces;
}

std::vector<SampleTrace> read_traces_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  return read_traces_jsonl(in);
}

// --- CSV ---

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorKind::Parse, "unterminated quote in CSV line");
  fields.push_back(std::move(current));
  return fields;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

std::string label_field(Label label) { return label == Label::unlabeled ? "" : std::string(to_string(label)); }

// Reads a CSV with a required header; returns the data rows.
std::vector<std::vector<std::string>> read_csv(std::istream& in, const std::vector<std::string>& header,
                                               const std::string& what) {
  std::string line;
  std::vector<std::vector<std::string>> rows;
  bool seen_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (!seen_header) {
      if (fields != header) throw Error(ErrorKind::Parse, what + ": unexpected header '" + line + "'");
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::Parse, what + " line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(header.size()) + " fields");
    }
    rows.push_back(std::move(fields));
  }
  if (!seen_header) throw Error(ErrorKind::Parse, what + ": missing header");
  return rows;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  return in;
}

}  // namespace

std::string write_scores_csv(const ScoreSet& scores) {
  std::string out = "id,label,score\n";
  for (const auto& e : scores) {
    out += csv_field(e.id) + "," + label_field(e.label) + "," + format_double(e.score) + "\n";
  }
  return out;
}

ScoreSet read_scores_csv(std::istream& in) {
  ScoreSet scores;
  for (auto& row : read_csv(in, {"id", "label", "score"}, "score CSV")) {
    scores.push_back(ScoreEntry{row[0], parse_decimal(row[2]), parse_label(row[1])});
  }
  return scores;
}

ScoreSet read_scores_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_scores_csv(in);
}

std::string write_split_csv(const std::vector<std::pair<std::string, Split>>& rows) {
  std::string out = "id,split\n";
  for (const auto& [id, split] : rows) out += csv_field(id) + "," + std::string(to_string(split)) + "\n";
  return out;
}

std::unordered_map<std::string, Split> read_split_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::unordered_map<std::string, Split> out;
  for (auto& row : read_csv(in, {"id", "split"}, "split CSV")) {
    const Split split = parse_split(row[1]);
    auto [it, inserted] = out.emplace(row[0], split);
    if (!inserted && it->second != split) {
      throw Error(ErrorKind::SplitOverlap, "sample '" + row[0] + "' is listed in both splits");
    }
  }
  return out;
}

std::string write_counts_csv(const std::vector<std::uint64_t>& counts) {
  std::string out = "token_id,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) out += std::to_string(i) + "," + std::to_string(counts[i]) + "\n";
  return out;
}

FrequencyTable read_frequency_csv(const std::filesystem::path& path, std::uint32_t vocab_size) {
  auto in = open_in(path);
  std::vector<std::uint64_t> counts(vocab_size, 0);
  for (auto& row : read_csv(in, {"token_id", "count"}, "frequency CSV")) {
    std::uint64_t id = 0;
    std::uint64_t count = 0;
    const auto r1 = std::from_chars(row[0].data(), row[0].data() + row[0].size(), id);
    const auto r2 = std::from_chars(row[1].data(), row[1].data() + row[1].size(), count);
    if (r1.ec != std::errc() || r1.ptr != row[0].data() + row[0].size() || r2.ec != std::errc() ||
        r2.ptr != row[1].data() + row[1].size()) {
      throw Error(ErrorKind::Parse, "frequency CSV row '" + row[0] + "," + row[1] + "' is not two integers");
    }
    if (id >= vocab_size) {
      throw Error(ErrorKind::VocabMismatch, "token id " + row[0] + " outside vocabulary of " + std::to_string(vocab_size));
    }
    counts[id] += count;
  }
  return FrequencyTable::from_counts(counts, 1.0);
}

std::string write_verdicts_csv(const ScoreSet& scores, const std::vector<int>& verdicts) {
  std::string out = "id,verdict\n";
  for (std::size_t i = 0; i < scores.size(); ++i) out += csv_field(scores[i].id) + "," + std::to_string(verdicts[i]) + "\n";
  return out;
}

std::string write_roc_csv(const std::vector<RocPoint>& points) {
  std::string out = "fpr,tpr\n";
  for (const auto& p : points) out += format_double(p.fpr) + "," + format_double(p.tpr) + "\n";
  return out;
}

std::string write_density_csv(const DensityTable& table) {
  std::string out = "bin_left,bin_right,density_member,density_nonmember\n";
  for (const auto& b : table.bins) {
    out += format_double(b.left) + "," + format_double(b.right) + "," + format_double(b.density_member) + "," +
           format_double(b.density_nonmember) + "\n";
  }
  return out;
}

std::string write_overlap_csv(const std::vector<std::tuple<std::string, Label, double>>& rows) {
  std::string out = "id,label,overlap\n";
  for (const auto& [id, label, overlap] : rows) {
    out += csv_field(id) + "," + label_field(label) + "," + format_double(overlap) + "\n";
  }
  return out;
}

// --- reports ---

json header_json(const ReportHeader& header) {
  json h;
  h["tool"] = std::string(kToolName);
  h["version"] = std::string(kToolVersion);
  h["config_hash"] = header.config_hash;
  h["seed"] = header.seed ? json(*header.seed) : json(nullptr);
  return h;
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

json tune_result_json(const TuneResult& result) {
  json j;
  j["tau_star"] = result.tau_star;
  j["alpha_star"] = result.alpha_star;
  j["log2_tau_star"] = result.log2_tau_star;
  j["objective"] = "auroc";
  j["objective_value"] = result.objective_value;
  json curve = json::array();
  for (const auto& c : result.curve) curve.push_back({{"tau", c.tau}, {"alpha", c.alpha}, {"objective", c.objective}});
  j["curve"] = std::move(curve);
  return j;
}

TuneResult tune_result_from_json(const json& report) {
  try {
    TuneResult r;
    r.tau_star = report.at("tau_star").get<double>();
    r.alpha_star = report.at("alpha_star").get<double>();
    r.log2_tau_star = report.at("log2_tau_star").get<double>();
    r.objective_value = report.at("objective_value").get<double>();
    for (const auto& c : report.at("curve")) {
      r.curve.push_back({c.at("tau").get<double>(), c.at("alpha").get<double>(), c.at("objective").get<double>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("tune report: ") + e.what());
  }
}

json roc_report_json(const RocReport& report) {
  json j;
  j["auroc"] = report.auroc;
  j["tpr_at_5fpr"] = report.tpr_at_5fpr;
  j["fpr_at_95tpr"] = report.fpr_at_95tpr;
  j["n_members"] = report.n_members;
  j["n_nonmembers"] = report.n_nonmembers;
  j["n_unlabeled_excluded"] = report.n_unlabeled;
  json points = json::array();
  for (const auto& p : report.points) points.push_back(json::array({p.fpr, p.tpr}));
  j["points"] = std::move(points);
  return j;
}

RocReport roc_report_from_json(const json& report) {
  try {
    RocReport r;
    r.auroc = report.at("auroc").get<double>();
    r.tpr_at_5fpr = report.at("tpr_at_5fpr").get<double>();
    r.fpr_at_95tpr = report.at("fpr_at_95tpr").get<double>();
    r.n_members = report.at("n_members").get<std::size_t>();
    r.n_nonmembers = report.at("n_nonmembers").get<std::size_t>();
    r.n_unlabeled = report.at("n_unlabeled_excluded").get<std::size_t>();
    for (const auto& p : report.at("points")) r.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("ROC report: ") + e.what());
  }
}

json chain_json(const toy::MarkovChain& chain, const toy::SynthConfig& config) {
  json j;
  j["seed"] = config.seed;
  j["vocab_size"] = chain.vocab_size;
  j["chain_order"] = chain.order;
  j["regimes"] = config.regimes;
  j["regime_leak"] = config.regime_leak;
  j["concentration_min"] = config.concentration_min;
  j["concentration_max"] = config.concentration_max;
  j["shift_epsilon"] = config.shift_epsilon;
  j["start_context"] = "chain_order copies of one uniformly drawn token per sequence";
  j["layout"] = "row-major [context][next_token], context packed base vocab_size, oldest token first";
  j["probabilities"] = chain.probabilities;
  return j;
}

}  // namespace acmia::io
