#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "acmia/io.hpp"
#include "commands.hpp"

namespace {

using namespace acmia;

void add_attack_flags(CLI::App& cmd, cli::AttackOptions& a, std::string& deriv_mode, bool& all_tokens) {
  cmd.add_option("--attack", a.attack,
                 "loss|mink|minkpp|zlib|lowercase|ref|dcpdd|ac|derivac|normac|ac-lossgrid|derivac-lossgrid")
      ->required();
  cmd.add_option("--tau", a.acmia.tau, "Temperature")->capture_default_str();
  cmd.add_option("--delta", a.acmia.delta, "Finite-difference step for DerivAC")->capture_default_str();
  cmd.add_option("--deriv-mode", deriv_mode, "analytic|finite_difference")
      ->check(CLI::IsMember({"analytic", "finite_difference"}))
      ->capture_default_str();
  cmd.add_flag("--all-tokens", all_tokens, "Score every token instead of first occurrences (ACMIA)");
  cmd.add_option("--k-percent", a.baseline.k_percent, "Min-K% / Min-K%++ k")->capture_default_str();
  cmd.add_option("--dcpdd-a", a.baseline.dcpdd_bound_a, "DC-PDD clipping bound")->capture_default_str();
  cmd.add_option("--compression-level", a.baseline.compression_level, "zlib level 0-9")->capture_default_str();
  cmd.add_option("--freq", a.frequencies, "token_id,count CSV for dcpdd");
  cmd.add_option("--vocab-size", a.vocab_size, "Vocabulary size for --freq (default: inferred)");
  cmd.add_option("--ref-traces", a.reference_traces, "Reference-model traces (ref)");
  cmd.add_option("--lower-traces", a.lowercase_traces, "Lowercased-text traces (lowercase)");
}

void finish_attack(cli::AttackOptions& a, const std::string& deriv_mode, bool all_tokens) {
  a.acmia.deriv_mode = deriv_mode == "analytic" ? DerivMode::analytic : DerivMode::finite_difference;
  a.acmia.restrict_fos = !all_tokens;
}

void add_grid_flags(CLI::App& cmd, cli::GridOptions& g) {
  cmd.add_option("--grid-log2-min", g.log2_min, "Smallest log2(tau)")->capture_default_str();
  cmd.add_option("--grid-log2-max", g.log2_max, "Largest log2(tau)")->capture_default_str();
  cmd.add_option("--grid-log2-step", g.log2_step, "log2(tau) step")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temperature-calibrated membership inference scoring over LM log-probability traces"};
  app.set_version_flag("--version", std::string(io::kToolVersion));
  app.require_subcommand(1);

  cli::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a seeded toy corpus and emit traces");
  simulate->add_option("--seed", sim.synth.seed)->capture_default_str();
  simulate->add_option("--vocab-size", sim.synth.vocab_size)->capture_default_str();
  simulate->add_option("--chain-order", sim.synth.chain_order)->capture_default_str();
  simulate->add_option("--members", sim.synth.n_members)->capture_default_str();
  simulate->add_option("--nonmembers", sim.synth.n_nonmembers)->capture_default_str();
  simulate->add_option("--reference", sim.synth.n_reference)->capture_default_str();
  simulate->add_option("--seq-len", sim.synth.seq_len)->capture_default_str();
  simulate->add_option("--shift-epsilon", sim.synth.shift_epsilon)->capture_default_str();
  simulate->add_option("--regimes", sim.synth.regimes)->capture_default_str();
  simulate->add_option("--regime-leak", sim.synth.regime_leak)->capture_default_str();
  simulate->add_option("--concentration-min", sim.synth.concentration_min)->capture_default_str();
  simulate->add_option("--concentration-max", sim.synth.concentration_max)->capture_default_str();
  simulate->add_option("--order", sim.order, "n-gram order of the target model")->capture_default_str();
  simulate->add_option("--beta", sim.beta, "Additive smoothing")->capture_default_str();
  simulate->add_option("--calibration-fraction", sim.calibration_fraction)->capture_default_str();
  simulate->add_flag("--lossgrid", sim.emit_lossgrid, "Also write lossgrid_traces.jsonl over the tau grid");
  simulate->add_option("--delta", sim.delta, "Extra tau offset stored in the loss grid")->capture_default_str();
  add_grid_flags(*simulate, sim.grid);
  simulate->add_option("--out", sim.out_dir, "Output directory")->required();
  int unused_threads = 1;
  simulate->add_option("--threads", unused_threads, "Accepted for symmetry; generation is sequential");

  cli::ScoreOptions score;
  std::string score_deriv = "analytic";
  bool score_all_tokens = false;
  auto* score_cmd = app.add_subcommand("score", "Score traces with one attack");
  score_cmd->add_option("--traces", score.traces)->required();
  add_attack_flags(*score_cmd, score.attack, score_deriv, score_all_tokens);
  score_cmd->add_option("--tune-report", score.tune_report, "Take tau (or k) from a tune report");
  score_cmd->add_option("--split", score.split, "id,split CSV");
  score_cmd->add_option("--subset", score.subset, "calibration|evaluation")
      ->check(CLI::IsMember({"calibration", "evaluation"}));
  score_cmd->add_option("--seed", score.seed);
  score_cmd->add_option("--threads", score.threads)->capture_default_str();
  score_cmd->add_option("--out", score.out)->required();

  cli::TuneOptions tune;
  std::string tune_deriv = "analytic";
  bool tune_all_tokens = false;
  auto* tune_cmd = app.add_subcommand("tune", "Pick tau (or k) maximizing calibration AUROC");
  tune_cmd->add_option("--traces", tune.traces, "Calibration traces")->required();
  tune_cmd->add_option("--split", tune.split, "id,split CSV; only calibration rows are used");
  tune_cmd->add_option("--eval-traces", tune.eval_traces, "Evaluation traces, checked for overlap");
  add_attack_flags(*tune_cmd, tune.attack, tune_deriv, tune_all_tokens);
  add_grid_flags(*tune_cmd, tune.grid);
  tune_cmd->add_option("--k-grid", tune.k_grid, "k values for mink/minkpp")->delimiter(',');
  tune_cmd->add_option("--seed", tune.seed);
  tune_cmd->add_option("--threads", tune.threads)->capture_default_str();
  tune_cmd->add_option("--out", tune.out)->required();

  cli::EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "ROC report for a score CSV");
  eval_cmd->add_option("--scores", eval.scores)->required();
  eval_cmd->add_option("--out", eval.out)->required();
  eval_cmd->add_option("--roc-csv", eval.roc_csv);
  eval_cmd->add_option("--density-csv", eval.density_csv);
  eval_cmd->add_option("--bins", eval.bins)->capture_default_str();
  eval_cmd->add_option("--normalization", eval.normalization)
      ->check(CLI::IsMember({"zscore", "minmax"}))
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed);
  int eval_threads = 1;
  eval_cmd->add_option("--threads", eval_threads, "Accepted for symmetry; evaluation is sequential");

  cli::DecideOptions dec;
  auto* decide_cmd = app.add_subcommand("decide", "Member verdicts: score >= lambda");
  decide_cmd->add_option("--scores", dec.scores)->required();
  decide_cmd->add_option("--lambda", dec.lambda)->required();
  decide_cmd->add_option("--out", dec.out)->required();

  cli::OverlapOptions ov;
  auto* overlap_cmd = app.add_subcommand("overlap", "Per-sample n-gram overlap with the member set");
  overlap_cmd->add_option("--traces", ov.traces)->required();
  overlap_cmd->add_option("--members", ov.members, "Member traces (default: members within --traces)");
  overlap_cmd->add_option("--n", ov.n)->capture_default_str();
  overlap_cmd->add_option("--out", ov.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kConfigError;
  }

  if (simulate->parsed()) return cli::run_simulate(sim, std::cerr);
  if (score_cmd->parsed()) {
    finish_attack(score.attack, score_deriv, score_all_tokens);
    return cli::run_score(score, std::cerr);
  }
  if (tune_cmd->parsed()) {
    finish_attack(tune.attack, tune_deriv, tune_all_tokens);
    return cli::run_tune(tune, std::cerr);
  }
  if (eval_cmd->parsed()) return cli::run_eval(eval, std::cerr);
  if (decide_cmd->parsed()) return cli::run_decide(dec, std::cerr);
  if (overlap_cmd->parsed()) return cli::run_overlap(ov, std::cerr);
  return cli::kConfigError;
}
