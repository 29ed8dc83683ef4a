#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "acmia/attacks.hpp"
#include "acmia/calibrate.hpp"
#include "acmia/error.hpp"
#include "acmia/io.hpp"
#include "acmia/metrics.hpp"

namespace acmia::cli {
namespace {

using nlohmann::json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::WrongFidelity: return kFidelityError;
    case ErrorKind::SplitOverlap: return kSplitOverlap;
    case ErrorKind::Io: return kIoError;
    default: return kConfigError;
  }
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "acmia: error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const json::exception& e) {
    err << "acmia: error: malformed JSON: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "acmia: error: " << e.what() << "\n";
    return kConfigError;
  }
}

// Canonical "key=value;" list hashed into report headers. Paths and thread
// counts are left out so that relocating files or changing --threads does not
// change any artifact.
class ConfigHasher {
 public:
  explicit ConfigHasher(std::string command) { add("command", command); }
  ConfigHasher& add(const std::string& key, const std::string& value) {
    text_ += key + "=" + value + ";";
    return *this;
  }
  ConfigHasher& add(const std::string& key, double value) { return add(key, io::format_double(value)); }
  std::string hex() const { return io::hash_hex(io::fnv1a64(text_)); }

 private:
  std::string text_;
};

void add_attack(ConfigHasher& h, const AttackOptions& a) {
  h.add("attack", a.attack)
      .add("tau", a.acmia.tau)
      .add("delta", a.acmia.delta)
      .add("deriv_mode", a.acmia.deriv_mode == DerivMode::analytic ? "analytic" : "finite_difference")
      .add("restrict_fos", a.acmia.restrict_fos ? "1" : "0")
      .add("k_percent", a.baseline.k_percent)
      .add("dcpdd_bound_a", a.baseline.dcpdd_bound_a)
      .add("compression_level", static_cast<double>(a.baseline.compression_level));
}

json attack_params_json(const AttackConfig& config) {
  json p;
  p["tau"] = config.acmia.tau;
  p["delta"] = config.acmia.delta;
  p["deriv_mode"] = config.acmia.deriv_mode == DerivMode::analytic ? "analytic" : "finite_difference";
  p["restrict_fos"] = config.acmia.restrict_fos;
  p["k_percent"] = config.baseline.k_percent;
  p["dcpdd_bound_a"] = config.baseline.dcpdd_bound_a;
  p["compression_level"] = config.baseline.compression_level;
  return p;
}

std::uint32_t infer_vocab_size(const std::vector<SampleTrace>& traces) {
  std::uint32_t vocab = 0;
  for (const auto& t : traces) {
    for (const auto& s : t.steps) {
      if (s.logits) vocab = std::max(vocab, static_cast<std::uint32_t>(s.logits->size()));
      vocab = std::max(vocab, s.token_id + 1);
    }
  }
  return vocab;
}

// Resolved attack plus owned side inputs.
struct PreparedAttack {
  AttackConfig config;
  std::optional<FrequencyTable> frequencies;
  std::optional<std::unordered_map<std::string, double>> reference_losses;
  std::optional<std::unordered_map<std::string, double>> lowercase_losses;

  AttackInputs inputs() const {
    AttackInputs in;
    if (frequencies) in.frequencies = &*frequencies;
    if (reference_losses) in.reference_losses = &*reference_losses;
    if (lowercase_losses) in.lowercase_losses = &*lowercase_losses;
    return in;
  }
};

PreparedAttack prepare_attack(const AttackOptions& options, const std::vector<SampleTrace>& traces) {
  PreparedAttack prepared;
  prepared.config.kind = parse_attack(options.attack);
  prepared.config.acmia = options.acmia;
  prepared.config.baseline = options.baseline;
  validate(prepared.config.acmia);
  validate(prepared.config.baseline);

  const AttackKind kind = prepared.config.kind;
  if (kind == AttackKind::dc_pdd) {
    if (!options.frequencies) throw Error(ErrorKind::InvalidConfig, "dcpdd needs --freq");
    const std::uint32_t vocab = options.vocab_size ? *options.vocab_size : infer_vocab_size(traces);
    prepared.frequencies = io::read_frequency_csv(*options.frequencies, vocab);
  }
  if (kind == AttackKind::ref) {
    if (!options.reference_traces) throw Error(ErrorKind::InvalidConfig, "ref needs --ref-traces");
    prepared.reference_losses = loss_by_id(io::read_traces_jsonl(*options.reference_traces));
  }
  if (kind == AttackKind::lowercase) {
    if (!options.lowercase_traces) throw Error(ErrorKind::InvalidConfig, "lowercase needs --lower-traces");
    prepared.lowercase_losses = loss_by_id(io::read_traces_jsonl(*options.lowercase_traces));
  }
  return prepared;
}

std::vector<SampleTrace> select_split(std::vector<SampleTrace> traces, const std::filesystem::path& split_path,
                                      Split wanted) {
  const auto split = io::read_split_csv(split_path);
  std::vector<SampleTrace> out;
  for (auto& t : traces) {
    auto it = split.find(t.id);
    if (it != split.end() && it->second == wanted) out.push_back(std::move(t));
  }
  return out;
}

std::string sample_id(char prefix, std::size_t index, std::size_t count) {
  std::string digits = std::to_string(index);
  const std::size_t width = std::max<std::size_t>(4, std::to_string(count == 0 ? 0 : count - 1).size());
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return std::string(1, prefix) + digits;
}

bool in_calibration(std::size_t index, double fraction) {
  return std::floor(static_cast<double>(index + 1) * fraction) > std::floor(static_cast<double>(index) * fraction);
}

toy::Sequence tokens_of(const SampleTrace& trace) {
  toy::Sequence out;
  out.reserve(trace.steps.size());
  for (const auto& s : trace.steps) out.push_back(s.token_id);
  return out;
}

}  // namespace

int run_simulate(const SimulateOptions& options, std::ostream& err) {
  return guarded(err, [&] {
    const auto& synth = options.synth;
    synth.validate();
    if (!(options.calibration_fraction > 0.0 && options.calibration_fraction < 1.0)) {
      throw Error(ErrorKind::InvalidConfig, "calibration fraction must lie in (0, 1)");
    }
    if (options.out_dir.empty()) throw Error(ErrorKind::InvalidConfig, "--out is required");

    const toy::SynthCorpus corpus = toy::synth_corpus(synth);
    const auto target = toy::NgramModel::train(corpus.members, options.order, synth.vocab_size, options.beta);
    const auto reference = toy::NgramModel::train(corpus.reference, options.order, synth.vocab_size, options.beta);

    std::vector<toy::Sequence> texts;
    std::vector<Label> labels;
    std::vector<std::string> ids;
    std::vector<std::pair<std::string, Split>> split_rows;
    const auto add = [&](const std::vector<toy::Sequence>& group, Label label, char prefix) {
      for (std::size_t i = 0; i < group.size(); ++i) {
        texts.push_back(group[i]);
        labels.push_back(label);
        ids.push_back(sample_id(prefix, i, group.size()));
        split_rows.emplace_back(ids.back(), in_calibration(i, options.calibration_fraction) ? Split::calibration
                                                                                          : Split::evaluation);
      }
    };
    add(corpus.members, Label::member, 'm');
    add(corpus.nonmembers, Label::nonmember, 'n');

    std::vector<std::string> raw_texts;
    std::vector<toy::Sequence> lowered;
    for (const auto& t : texts) {
      raw_texts.push_back(toy::render_text(t, synth.vocab_size));
      lowered.push_back(toy::tokenize_text(simple_lowercase(raw_texts.back()), synth.vocab_size));
    }

    const auto traces = toy::emit_traces(target, texts, labels, ids, raw_texts);
    const auto out = options.out_dir;
    io::write_traces_jsonl(out / "traces.jsonl", traces);
    io::write_traces_jsonl(out / "ref_traces.jsonl", toy::emit_chosen_traces(reference, texts, labels, ids));
    io::write_traces_jsonl(out / "lower_traces.jsonl", toy::emit_chosen_traces(target, lowered, labels, ids));
    io::write_file(out / "split.csv", io::write_split_csv(split_rows));
    io::write_file(out / "freq.csv", io::write_counts_csv(toy::token_counts(corpus.reference, synth.vocab_size)));

    ConfigHasher hasher("simulate");
    hasher.add("seed", std::to_string(synth.seed))
        .add("vocab_size", std::to_string(synth.vocab_size))
        .add("chain_order", std::to_string(synth.chain_order))
        .add("n_members", std::to_string(synth.n_members))
        .add("n_nonmembers", std::to_string(synth.n_nonmembers))
        .add("n_reference", std::to_string(synth.n_reference))
        .add("seq_len", std::to_string(synth.seq_len))
        .add("shift_epsilon", synth.shift_epsilon)
        .add("regimes", std::to_string(synth.regimes))
        .add("regime_leak", synth.regime_leak)
        .add("concentration_min", synth.concentration_min)
        .add("concentration_max", synth.concentration_max)
        .add("order", std::to_string(options.order))
        .add("beta", options.beta)
        .add("calibration_fraction", options.calibration_fraction);

    if (options.emit_lossgrid) {
      const auto grid = TuneGrid::from_log2(options.grid.log2_min, options.grid.log2_max, options.grid.log2_step);
      std::vector<double> taus;
      for (double alpha : grid.alphas()) {
        taus.push_back(std::exp(alpha));
        taus.push_back(std::exp(alpha) + options.delta);
      }
      std::vector<SampleTrace> grids;
      grids.reserve(traces.size());
      for (const auto& t : traces) grids.push_back(to_loss_grid(t, taus));
      io::write_traces_jsonl(out / "lossgrid_traces.jsonl", grids);
      hasher.add("lossgrid_log2_min", options.grid.log2_min)
          .add("lossgrid_log2_max", options.grid.log2_max)
          .add("lossgrid_log2_step", options.grid.log2_step)
          .add("lossgrid_delta", options.delta);
    }

    json sidecar;
    sidecar["header"] = io::header_json({hasher.hex(), synth.seed});
    sidecar["chain"] = io::chain_json(corpus.chain, synth);
    sidecar["model"] = {{"order", options.order}, {"beta", options.beta}, {"vocab_size", synth.vocab_size}};
    io::write_file(out / "chain.json", sidecar.dump() + "\n");
    return kOk;
  });
}

int run_score(const ScoreOptions& options, std::ostream& err) {
  return guarded(err, [&] {
    auto traces = io::read_traces_jsonl(options.traces);
    if (options.subset) {
      if (!options.split) throw Error(ErrorKind::InvalidConfig, "--subset needs --split");
      traces = select_split(std::move(traces), *options.split, parse_split(*options.subset));
    }
    AttackOptions attack = options.attack;
    if (options.tune_report) {
      const json report = json::parse(io::read_file(*options.tune_report));
      if (report.contains("tau_star")) attack.acmia.tau = report.at("tau_star").get<double>();
      if (report.contains("k_star")) attack.baseline.k_percent = report.at("k_star").get<double>();
    }
    const PreparedAttack prepared = prepare_attack(attack, traces);
    const ScoreSet scores = score_traces(traces, prepared.config, prepared.inputs(), options.threads);
    io::write_file(options.out, io::write_scores_csv(scores));
    return kOk;
  });
}

int run_tune(const TuneOptions& options, std::ostream& err) {
  return guarded(err, [&] {
    auto calibration = io::read_traces_jsonl(options.traces);
    if (options.split) calibration = select_split(std::move(calibration), *options.split, Split::calibration);
    if (options.eval_traces) {
      std::error_code ec;
      if (std::filesystem::equivalent(options.traces, *options.eval_traces, ec) && !options.split) {
        throw Error(ErrorKind::SplitOverlap, "calibration and evaluation files are the same file");
      }
      auto evaluation = io::read_traces_jsonl(*options.eval_traces);
      if (options.split) evaluation = select_split(std::move(evaluation), *options.split, Split::evaluation);
      check_disjoint(calibration, evaluation);
    }
    for (const auto& t : calibration) {
      if (t.label == Label::unlabeled) {
        throw Error(ErrorKind::DegenerateSplit, "calibration sample '" + t.id + "' is unlabeled");
      }
    }

    const PreparedAttack prepared = prepare_attack(options.attack, calibration);
    ConfigHasher hasher("tune");
    add_attack(hasher, options.attack);

    json report;
    report["attack"] = options.attack.attack;
    report["n_calibration"] = calibration.size();
    if (uses_k_percent(prepared.config.kind)) {
      std::string ks;
      for (double k : options.k_grid) ks += io::format_double(k) + ",";
      hasher.add("k_grid", ks);
      const auto result = tune_k_percent(calibration, prepared.config, options.k_grid, prepared.inputs(),
                                         options.threads);
      report["params"] = attack_params_json(prepared.config);
      report["k_star"] = result.k_star;
      report["objective"] = "auroc";
      report["objective_value"] = result.objective_value;
      json curve = json::array();
      for (const auto& [k, value] : result.curve) curve.push_back({{"k_percent", k}, {"objective", value}});
      report["curve"] = std::move(curve);
    } else {
      hasher.add("grid_log2_min", options.grid.log2_min)
          .add("grid_log2_max", options.grid.log2_max)
          .add("grid_log2_step", options.grid.log2_step);
      const auto grid = TuneGrid::from_log2(options.grid.log2_min, options.grid.log2_max, options.grid.log2_step);
      const auto result = tune_temperature(calibration, prepared.config, grid, prepared.inputs(), options.threads);
      AttackConfig tuned = prepared.config;
      tuned.acmia.tau = result.tau_star;
      report["params"] = attack_params_json(tuned);
      const json fields = io::tune_result_json(result);
      for (const auto& [key, value] : fields.items()) report[key] = value;
    }
    if (options.seed) hasher.add("seed", std::to_string(*options.seed));
    report["header"] = io::header_json({hasher.hex(), options.seed});
    io::write_file(options.out, io::dump_report(report));
    return kOk;
  });
}

int run_eval(const EvalOptions& options, std::ostream& err) {
  return guarded(err, [&] {
    const ScoreSet scores = io::read_scores_csv(options.scores);
    const RocReport roc = roc_report(scores);
    if (roc.n_unlabeled > 0) {
      err << "acmia: warning: " << roc.n_unlabeled << " unlabeled row(s) excluded from metrics\n";
    }
    ConfigHasher hasher("eval");
    json report = io::roc_report_json(roc);
    if (options.density_csv) {
      const Normalization normalization = parse_normalization(options.normalization);
      const DensityTable density = export_density(scores, options.bins, normalization);
      io::write_file(*options.density_csv, io::write_density_csv(density));
      report["density"] = {{"normalization", options.normalization},
                           {"bins", options.bins},
                           {"mean_gap", density.mean_gap}};
      hasher.add("bins", std::to_string(options.bins)).add("normalization", options.normalization);
    }
    if (options.seed) hasher.add("seed", std::to_string(*options.seed));
    report["header"] = io::header_json({hasher.hex(), options.seed});
    if (options.roc_csv) io::write_file(*options.roc_csv, io::write_roc_csv(roc.points));
    io::write_file(options.out, io::dump_report(report));
    return kOk;
  });
}

int run_decide(const DecideOptions& options, std::ostream& err) {
  return guarded(err, [&] {
    if (!std::isfinite(options.lambda)) throw Error(ErrorKind::InvalidConfig, "--lambda must be finite");
    const ScoreSet scores = io::read_scores_csv(options.scores);
    io::write_file(options.out, io::write_verdicts_csv(scores, decide(scores, options.lambda)));
    return kOk;
  });
}

namespace {

// Distinct-member counts per n-gram, so that a member's own n-grams can be
// discounted when it is scored against the rest of the member set.
class MemberGramCounts {
 public:
  MemberGramCounts(const std::vector<toy::Sequence>& members, std::size_t n) : n_(n) {
    for (const auto& m : members) {
      for (const auto& g : distinct_grams(m)) ++counts_[g];
    }
  }

  double overlap(const toy::Sequence& x, bool exclude_self) const {
    if (x.size() < n_) {
      throw Error(ErrorKind::SequenceTooShort, "sequence of " + std::to_string(x.size()) + " tokens has no " +
                                                   std::to_string(n_) + "-grams");
    }
    const std::size_t total = x.size() - n_ + 1;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < total; ++i) {
      const std::vector<std::uint32_t> gram(x.begin() + static_cast<std::ptrdiff_t>(i),
                                            x.begin() + static_cast<std::ptrdiff_t>(i + n_));
      auto it = counts_.find(gram);
      const std::size_t count = it == counts_.end() ? 0 : it->second;
      if (count > (exclude_self ? 1U : 0U)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
  }

 private:
  struct Hash {
    std::size_t operator()(const std::vector<std::uint32_t>& v) const noexcept {
      return static_cast<std::size_t>(io::fnv1a64(
          std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(std::uint32_t))));
    }
  };

  std::unordered_set<std::vector<std::uint32_t>, Hash> distinct_grams(const toy::Sequence& s) const {
    std::unordered_set<std::vector<std::uint32_t>, Hash> grams;
    for (std::size_t i = 0; i + n_ <= s.size(); ++i) {
      grams.emplace(s.begin() + static_cast<std::ptrdiff_t>(i), s.begin() + static_cast<std::ptrdiff_t>(i + n_));
    }
    return grams;
  }

  std::size_t n_;
  std::unordered_map<std::vector<std::uint32_t>, std::size_t, Hash> counts_;
};

}  // namespace

int run_overlap(const OverlapOptions& options, std::ostream& err) {
  return guarded(err, [&] {
    if (options.n < 1) throw Error(ErrorKind::InvalidConfig, "--n must be >= 1");
    const auto traces = io::read_traces_jsonl(options.traces);
    // Without --members the member set is the member-labeled samples of
    // --traces, and each member is compared against the other members only.
    const bool same_file = !options.members;
    const auto member_traces = same_file ? traces : io::read_traces_jsonl(*options.members);
    std::vector<toy::Sequence> members;
    for (const auto& t : member_traces) {
      if (!same_file || t.label == Label::member) members.push_back(tokens_of(t));
    }
    const MemberGramCounts counts(members, options.n);
    std::vector<std::tuple<std::string, Label, double>> rows;
    for (const auto& t : traces) {
      rows.emplace_back(t.id, t.label, counts.overlap(tokens_of(t), same_file && t.label == Label::member));
    }
    io::write_file(options.out, io::write_overlap_csv(rows));
    return kOk;
  });
}

}  // namespace acmia::cli
