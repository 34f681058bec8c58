#include "blr/cli.hpp"

#include "blr/data_sim.hpp"
#include "blr/eval_metrics.hpp"
#include "blr/gmjmcmc.hpp"
#include "blr/predict.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace blr::cli {

namespace {

struct UsageError : Error {
  using Error::Error;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

bool given(const std::vector<std::string>& args, const std::string& flag) {
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Flat "key = value" lines become "--key=value" arguments unless the same
// flag was given on the command line.
void merge_config(std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  std::vector<std::string> extra;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "config") throw UsageError(path + ":" + std::to_string(lineno) + ": config files cannot nest");
    const std::string flag = "--" + key;
    if (!given(args, flag)) extra.push_back(flag + "=" + trim(line.substr(eq + 1)));
  }
  args.insert(args.end(), extra.begin(), extra.end());
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

struct GmjFlags {
  GmjConfig cfg;
  std::string log_a;
  std::string complexity = "leaf";
  std::string aggregation = "weighted";
  unsigned threads = 0;

  void add(CLI::App* app) {
    app->add_option("--d", cfg.d, "Population size");
    app->add_option("--d1", cfg.d1, "Protected prefix of the first population");
    app->add_option("--cmax", cfg.c_max, "Maximum leaves per tree");
    app->add_option("--kmax", cfg.k_max, "Maximum active components per model");
    app->add_option("--p-and", cfg.p_and, "Crossover AND probability");
    app->add_option("--p-not", cfg.p_not, "Negation probability");
    app->add_option("--rho-min", cfg.rho_min, "Inclusion below which trees may be dropped");
    app->add_option("--generations", cfg.t_max, "Number of populations including the last");
    app->add_option("--p-fresh", cfg.p_fresh_leaf, "Probability of refilling with a fresh leaf");
    app->add_option("--retries", cfg.retry_budget, "Candidate draws per vacancy");
    app->add_option("--explore-iter", cfg.exploratory.n_iter, "MJMCMC iterations per exploratory population");
    app->add_option("--final-iter", cfg.final_stage.n_iter, "MJMCMC iterations on the last population");
    app->add_option("--mfin", cfg.m_fin, "Registry capacity");
    app->add_option("--chains", cfg.chains, "Independent chains");
    app->add_option("--threads", threads, "Worker threads (0 = all cores)");
    app->add_option("--report-level", cfg.report_threshold, "Inclusion threshold for the report");
    app->add_option("--log-a", log_a, "Prior penalty log a (default -2 log p)");
    app->add_option("--complexity", complexity, "Tree complexity measure")->check(CLI::IsMember({"leaf", "node"}));
    app->add_option("--aggregate", aggregation, "Chain aggregation")->check(CLI::IsMember({"weighted", "union"}));
    for (auto* p : {&cfg.exploratory, &cfg.final_stage}) {
      const std::string pre = p == &cfg.exploratory ? "--explore-" : "--final-";
      app->add_option(pre + "jump-prob", p->jump_probability, "Mode-jump probability");
      app->add_option(pre + "min-flip", p->min_flip, "Smallest local flip count");
      app->add_option(pre + "max-flip", p->max_flip, "Largest local flip count");
      app->add_option(pre + "min-jump", p->min_jump_flip, "Smallest jump flip count");
      app->add_option(pre + "max-jump", p->max_jump_flip, "Largest jump flip count");
      app->add_option(pre + "eps", p->randomization, "Per-bit randomization probability");
      app->add_option(pre + "greedy-steps", p->greedy_max_steps, "Greedy optimizer step limit");
    }
  }

  void resolve() {
    if (!log_a.empty()) {
      try {
        cfg.log_a = std::stod(log_a);
      } catch (const std::exception&) {
        throw UsageError("--log-a: not a number: " + log_a);
      }
    }
    cfg.measure = complexity == "node" ? ComplexityMeasure::NodeCount : ComplexityMeasure::LeafCount;
    cfg.validate();
  }

  AggregationMode mode() const { return aggregation == "union" ? AggregationMode::Union : AggregationMode::Weighted; }
};

std::uint64_t resolve_seed(const std::string& text) {
  if (text.empty()) {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) | rd();
  }
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("--seed: not an unsigned integer: " + text);
  }
}

void echo_config(const CLI::App* sub, std::uint64_t seed, std::ostream& err) {
  err << "# " << sub->get_name() << '\n';
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "seed" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
    } else {
      value = opt->get_default_str();
    }
    if (opt->get_expected_max() == 0) value = opt->count() > 0 ? "true" : "false";
    err << name << '=' << value << '\n';
  }
  err << "seed=" << seed << '\n';
}

template <typename F>
void with_output(const std::string& path, std::ostream& fallback, F&& fn) {
  if (path.empty() || path == "-") {
    fn(fallback);
    return;
  }
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write " + path);
  fn(f);
}

std::vector<Eigen::Index> read_markers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<Eigen::Index> perm;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    try {
      perm.push_back(std::stol(line.substr(tab == std::string::npos ? 0 : tab + 1)));
    } catch (const std::exception&) {
      throw UsageError(path + ": malformed line '" + line + "'");
    }
  }
  return perm;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian logic regression by genetically modified mode jumping MCMC", "blr_cli"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.allow_extras(false);

  std::string seed_text, config_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed_text, "Random seed (random when omitted; always echoed)");
    sub->add_option("--config", config_path, "Flat key = value file; command-line flags win");
  };

  // simulate
  SimulationConfig sim;
  std::string sim_scenario = "scenario5", sim_generator = "general", sim_out;
  bool no_permute = false;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a scenario data set (CSV + .truth sidecar)");
  simulate_cmd->add_option("--scenario", sim_scenario, "scenario5, scenario4 or scenario4_age");
  simulate_cmd->add_option("--generator", sim_generator, "general or qtl")->check(CLI::IsMember({"general", "qtl"}));
  simulate_cmd->add_option("--n", sim.n, "Observations");
  simulate_cmd->add_option("--p", sim.p, "Covariates (general generator)");
  simulate_cmd->add_option("--alphad", sim.alphad, "Vine Beta parameter");
  simulate_cmd->add_option("--margprob", sim.margprob, "Marginal probability of a one");
  simulate_cmd->add_flag("--no-permute", no_permute, "Keep marker order (qtl generator)");
  simulate_cmd->add_option("--out", sim_out, "Output CSV")->required();
  add_common(simulate_cmd);

  // fit
  GmjFlags fit_flags;
  std::string fit_data, fit_response = "Y", fit_fixed, fit_out, fit_registry;
  auto* fit_cmd = app.add_subcommand("fit", "Fit GMJMCMC chains and report expressions");
  fit_cmd->add_option("--data", fit_data, "Input CSV")->required();
  fit_cmd->add_option("--response", fit_response, "Response column");
  fit_cmd->add_option("--fixed", fit_fixed, "Comma-separated non-binary columns");
  fit_cmd->add_option("--out", fit_out, "Report TSV (stdout when omitted)");
  fit_cmd->add_option("--registry", fit_registry, "Also dump the merged model registry");
  fit_flags.add(fit_cmd);
  add_common(fit_cmd);

  // score
  std::string score_report, score_truth, score_markers, score_fixed;
  double score_window = 0;
  auto* score_cmd = app.add_subcommand("score", "Score a report against the generating trees");
  score_cmd->add_option("--report", score_report, "Report TSV")->required();
  score_cmd->add_option("--truth", score_truth, "Truth sidecar")->required();
  score_cmd->add_option("--window", score_window, "Window in cM (needs --markers)");
  score_cmd->add_option("--markers", score_markers, "Column-to-marker sidecar from simulate");
  score_cmd->add_option("--fixed", score_fixed, "Report entries to skip (non-binary covariates)");

  // study
  GmjFlags study_flags;
  StudyConfig study;
  std::string study_scenario = "scenario5", study_generator = "general", study_out;
  double study_window = 0;
  auto* study_cmd = app.add_subcommand("study", "Replication study with a summary table");
  study_cmd->add_option("--scenario", study_scenario, "scenario5, scenario4 or scenario4_age");
  study_cmd->add_option("--generator", study_generator, "general or qtl")->check(CLI::IsMember({"general", "qtl"}));
  study_cmd->add_option("--replicates", study.replicates, "Number of simulated data sets");
  study_cmd->add_option("--n", study.simulation.n, "Observations per replicate");
  study_cmd->add_option("--p", study.simulation.p, "Covariates (general generator)");
  study_cmd->add_option("--alphad", study.simulation.alphad, "Vine Beta parameter");
  study_cmd->add_option("--window", study_window, "Also score with this cM window (qtl; 0 = off)");
  study_cmd->add_option("--out", study_out, "Summary TSV");
  study_flags.add(study_cmd);
  add_common(study_cmd);

  // predict
  GmjFlags pred_flags;
  std::string pred_train, pred_test, pred_response = "Y", pred_fixed, pred_out, pred_method = "bma", pred_baseline;
  std::size_t pred_best = 100;
  auto* predict_cmd = app.add_subcommand("predict", "Fit on training data and predict the test data");
  predict_cmd->add_option("--train", pred_train, "Training CSV")->required();
  predict_cmd->add_option("--test", pred_test, "Test CSV")->required();
  predict_cmd->add_option("--response", pred_response, "Response column");
  predict_cmd->add_option("--fixed", pred_fixed, "Comma-separated non-binary columns");
  predict_cmd->add_option("--method", pred_method, "bma, median, map or ridge")
      ->check(CLI::IsMember({"bma", "median", "map", "ridge"}));
  predict_cmd->add_option("--num-best", pred_best, "Models averaged by BMA");
  predict_cmd->add_option("--baseline", pred_baseline, "Also report a baseline")->check(CLI::IsMember({"ridge"}));
  predict_cmd->add_option("--out", pred_out, "Predictions CSV (stdout when omitted)");
  pred_flags.add(predict_cmd);
  add_common(predict_cmd);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    merge_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  // Help on a subcommand is reported through the subcommand.
  for (auto* sub : app.get_subcommands())
    if (sub->get_help_ptr() && sub->get_help_ptr()->count() > 0) {
      out << sub->help();
      return 0;
    }

  try {
    if (*simulate_cmd) {
      const std::uint64_t seed = resolve_seed(seed_text);
      echo_config(simulate_cmd, seed, err);
      sim.scenario = parse_scenario(sim_scenario);
      sim.generator = parse_generator(sim_generator);
      sim.permute = !no_permute;
      Rng rng = make_rng(seed);
      const Simulated s = simulate(sim, rng);
      write_csv(std::filesystem::path(sim_out), s.data);
      write_truth(sim_out + ".truth", s.data.truth);
      if (sim.generator == Generator::Qtl) {
        with_output(sim_out + ".markers", out, [&](std::ostream& o) {
          o << "column\tmarker\n";
          for (std::size_t j = 0; j < s.permutation.size(); ++j)
            o << s.data.x_names[j] << '\t' << s.permutation[j] << '\n';
        });
      }
    } else if (*fit_cmd) {
      const std::uint64_t seed = resolve_seed(seed_text);
      echo_config(fit_cmd, seed, err);
      fit_flags.resolve();
      const Dataset data = read_csv(std::filesystem::path(fit_data), fit_response, split_list(fit_fixed));
      const auto chains = run_chains(data, fit_flags.cfg, seed, fit_flags.threads);
      const AggregateReport agg = aggregate_chains(chains, fit_flags.mode());
      with_output(fit_out, out,
                  [&](std::ostream& o) { write_report(o, report_expressions(agg, fit_flags.cfg.report_threshold)); });
      if (!fit_registry.empty())
        with_output(fit_registry, out, [&](std::ostream& o) { write_registry(o, merge_registries(chains)); });
    } else if (*score_cmd) {
      std::ifstream rin(score_report);
      if (!rin) throw UsageError("cannot open " + score_report);
      const std::vector<std::string> skip = split_list(score_fixed);
      Report report;
      for (auto& e : read_report(rin))
        if (std::find(skip.begin(), skip.end(), e.first) == skip.end()) report.push_back(e);
      const auto truth = read_truth(score_truth);
      std::optional<MarkerLayout> layout;
      std::optional<double> window;
      if (score_cmd->count("--window")) {
        if (score_markers.empty()) throw UsageError("--window needs --markers");
        layout = MarkerLayout{GeneticMap::default_map(), read_markers(score_markers)};
        window = score_window;
      }
      const ScoreCard card = match_discoveries(report, truth, window, layout ? &*layout : nullptr);
      out << "mode\t" << (window ? "windowed" : "strict") << '\n';
      for (std::size_t t = 0; t < truth.size(); ++t)
        out << "L" << t + 1 << ' ' << to_string(truth[t]) << '\t' << (card.hits[t] ? 1 : 0) << '\n';
      out << "Overall Power\t" << card.power() << '\n'
          << "FP\t" << card.false_positives << '\n'
          << "FDR\t" << card.fdr() << '\n'
          << "WL\t" << card.wrong_leaves << '\n';
    } else if (*study_cmd) {
      study.seed = resolve_seed(seed_text);
      echo_config(study_cmd, study.seed, err);
      study_flags.resolve();
      study.gmj = study_flags.cfg;
      study.threads = study_flags.threads;
      study.aggregation = study_flags.mode();
      study.simulation.scenario = parse_scenario(study_scenario);
      study.simulation.generator = parse_generator(study_generator);
      if (study_window > 0) study.window = study_window;
      const StudyResult res = replicate_study(study);
      if (!study_out.empty()) with_output(study_out, out, [&](std::ostream& o) { write_study_tsv(o, res); });
      write_study_table(out, res);
    } else if (*predict_cmd) {
      const std::uint64_t seed = resolve_seed(seed_text);
      echo_config(predict_cmd, seed, err);
      pred_flags.resolve();
      const auto fixed = split_list(pred_fixed);
      const Dataset train = read_csv(std::filesystem::path(pred_train), pred_response, fixed);
      const Dataset test = read_csv(std::filesystem::path(pred_test), pred_response, fixed);
      auto metrics = [&](const PredictionResult& p) {
        const PredictionScore s = score_predictions(p.values, test.y);
        out << method_name(p.method) << ": RMSE=" << s.rmse << ", MAE=" << s.mae << '\n';
      };
      const std::vector<double> grid = ridge_grid(train.y);
      PredictionResult main;
      if (pred_method == "ridge") {
        main = ridge_baseline(train, test, grid);
      } else {
        const auto chains = run_chains(train, pred_flags.cfg, seed, pred_flags.threads);
        const VisitedRegistry merged = merge_registries(chains);
        if (pred_method == "bma")
          main = predict_bma(merged, test, pred_best);
        else
          main = predict_single(merged, train, test,
                                pred_method == "map" ? SelectionRule::Map : SelectionRule::MedianProbability);
      }
      if (!pred_out.empty()) with_output(pred_out, out, [&](std::ostream& o) { write_predictions(o, main); });
      metrics(main);
      if (pred_baseline == "ridge" && pred_method != "ridge") metrics(ridge_baseline(train, test, grid));
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace blr::cli
