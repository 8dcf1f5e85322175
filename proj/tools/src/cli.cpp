#include "cli.hpp"

#include <algorithm>
#include <functional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "saf/error.hpp"
#include "saf/filters.hpp"

namespace saf::cli {
namespace {

using nlohmann::json;

void add_config_flags(CLI::App* app, TrainConfig& c, std::string& backbone) {
  app->add_option("--lr", c.lr, "learning rate")->capture_default_str();
  app->add_option("--weight-decay", c.weight_decay, "L2 weight decay")->capture_default_str();
  app->add_option("--dropout", c.dropout, "dropout probability")->capture_default_str();
  app->add_option("--order,-K", c.order, "polynomial order K")->capture_default_str();
  app->add_option("--layers,-L", c.layers, "spatial propagation steps L")->capture_default_str();
  app->add_option("--tau", c.tau, "adapted-graph strength")->capture_default_str();
  app->add_option("--eta", c.eta, "spatial mixing weight")->capture_default_str();
  app->add_option("--epsilon", c.epsilon, "adapted-graph threshold (0 keeps it dense)")->capture_default_str();
  app->add_option("--delta", c.delta, "attention normalizer floor")->capture_default_str();
  app->add_option("--hidden", c.hidden, "MLP hidden width")->capture_default_str();
  app->add_option("--max-epochs", c.max_epochs)->capture_default_str();
  app->add_option("--patience", c.patience)->capture_default_str();
  app->add_option("--seed", c.seed)->capture_default_str();
  app->add_option("--basis-mode", c.basis_mode, "full | smallest | largest | both_ends")->capture_default_str();
  app->add_option("--basis-m", c.basis_m, "eigenpairs kept when basis-mode is partial")->capture_default_str();
  app->add_option("--backbone", backbone, "bern | cheb")->capture_default_str();
  app->add_option("--g-floor", c.g_floor, "lower clamp on the filter response")->capture_default_str();
  app->add_option("--adapted-cap", c.adapted_cap, "largest N for a dense adapted graph")->capture_default_str();
  app->add_flag("--no-attention", c.no_attention, "mix the two branches equally");
  app->add_flag("--no-spectral", c.no_spectral, "drop the spectral branch");
  app->add_flag("--no-spatial", c.no_spatial, "drop the spatial branch");
}

int exit_code_for(ErrorCode code) {
  switch (classify(code)) {
    case ErrorClass::Numerical: return kExitNumerical;
    case ErrorClass::NotConverged: return kExitNotConverged;
    case ErrorClass::Validation: break;
  }
  return kExitValidation;
}

int report_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatially adaptive spectral filtering toolkit", "saf"};
  app.set_version_flag("--version", "saf 0.1.0");
  app.require_subcommand(1);

  std::function<int()> action;
  std::string backbone = "bern";

  TrainOptions train;
  auto* c_train = app.add_subcommand("train", "fit SAF over one or more seeds");
  c_train->add_option("--data", train.data, "dataset directory")->required();
  c_train->add_option("--out", train.out, "output directory")->capture_default_str();
  c_train->add_option("--scheme", train.scheme, "standard | sparse | dense")->capture_default_str();
  c_train->add_option("--split", train.split_file, "split.json to use for every run");
  c_train->add_option("--runs", train.runs, "repeated seeds; run r uses seed + r")->capture_default_str();
  c_train->add_option("--cache-dir", train.cache_dir, "eigenbasis cache (default: $SAF_CACHE_DIR)");
  add_config_flags(c_train, train.config, backbone);
  c_train->callback([&] {
    action = [&] {
      train.config.backbone = parse_filter_basis(backbone);
      cmd_train(train, out);
      return kExitOk;
    };
  });

  EvalOptions eval;
  auto* c_eval = app.add_subcommand("eval", "accuracy of a saved model");
  c_eval->add_option("--data", eval.data)->required();
  c_eval->add_option("--checkpoint", eval.checkpoint, "model.json")->required();
  c_eval->add_option("--split", eval.split_file, "overrides the split stored in the checkpoint");
  c_eval->add_option("--cache-dir", eval.cache_dir);
  c_eval->callback([&] {
    action = [&] {
      cmd_eval(eval, out);
      return kExitOk;
    };
  });

  AnalyzeOptions analyze;
  double analyze_eps = 0.0;
  auto* c_analyze = app.add_subcommand("analyze", "adapted-graph statistics and attention trend");
  c_analyze->add_option("--data", analyze.data)->required();
  c_analyze->add_option("--checkpoint", analyze.checkpoint)->required();
  c_analyze->add_option("--out", analyze.out, "output directory (default: next to the checkpoint)");
  c_analyze->add_option("--history", analyze.history, "history.jsonl (default: next to the checkpoint)");
  c_analyze->add_option("--cache-dir", analyze.cache_dir);
  auto* eps_opt = c_analyze->add_option("--epsilon", analyze_eps, "threshold (default: the checkpoint's)");
  c_analyze->callback([&] {
    action = [&] {
      if (eps_opt->count() > 0) analyze.epsilon = analyze_eps;
      cmd_analyze(analyze, out);
      return kExitOk;
    };
  });

  EquivalenceOptions equiv;
  auto* c_equiv = app.add_subcommand("check-equivalence", "iterative fixed point vs closed-form filter");
  c_equiv->add_option("--data", equiv.data)->required();
  c_equiv->add_option("--coeffs", equiv.coefficients, "filter coefficients, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  c_equiv->add_option("--backbone", backbone)->capture_default_str();
  c_equiv->add_option("--tau", equiv.tau)->capture_default_str();
  c_equiv->add_option("--tolerance", equiv.tolerance, "stop when successive iterates differ by less")
      ->capture_default_str();
  c_equiv->add_option("--max-steps", equiv.max_steps)->capture_default_str();
  c_equiv->add_option("--threshold", equiv.threshold, "largest accepted deviation")->capture_default_str();
  c_equiv->callback([&] {
    action = [&] {
      equiv.backbone = parse_filter_basis(backbone);
      const json r = cmd_check_equivalence(equiv, out);
      if (!r["pass"].get<bool>()) {
        return report_error(err, "EquivalenceMismatch",
                            "max deviation " + r["max_deviation"].dump() + " exceeds " + r["threshold"].dump(),
                            kExitNumerical);
      }
      return kExitOk;
    };
  });

  GridOptions grid;
  auto* c_grid = app.add_subcommand("grid", "hyperparameter search");
  c_grid->add_option("--data", grid.data)->required();
  c_grid->add_option("--out", grid.out)->capture_default_str();
  c_grid->add_option("--scheme", grid.scheme)->capture_default_str();
  c_grid->add_option("--split", grid.split_file);
  c_grid->add_option("--budget", grid.budget, "sampled configurations (0 = exhaustive)")->capture_default_str();
  c_grid->add_option("--jobs", grid.jobs, "parallel fits")->capture_default_str();
  c_grid->add_option("--top", grid.top, "rows printed")->capture_default_str();
  c_grid->add_option("--cache-dir", grid.cache_dir);
  c_grid->add_option("--lr-grid", grid.space.lr)->delimiter(',');
  c_grid->add_option("--weight-decay-grid", grid.space.weight_decay)->delimiter(',');
  c_grid->add_option("--dropout-grid", grid.space.dropout)->delimiter(',');
  c_grid->add_option("--layers-grid", grid.space.layers)->delimiter(',');
  c_grid->add_option("--tau-grid", grid.space.tau)->delimiter(',');
  c_grid->add_option("--eta-grid", grid.space.eta)->delimiter(',');
  c_grid->add_option("--epsilon-grid", grid.space.epsilon)->delimiter(',');
  add_config_flags(c_grid, grid.base, backbone);
  c_grid->callback([&] {
    action = [&] {
      grid.base.backbone = parse_filter_basis(backbone);
      cmd_grid(grid, out);
      return kExitOk;
    };
  });

  SbmOptions sbm;
  auto* c_sbm = app.add_subcommand("gen-sbm", "write a stochastic block model dataset");
  c_sbm->add_option("--out", sbm.out, "dataset directory")->required();
  c_sbm->add_option("--nodes", sbm.spec.num_nodes)->capture_default_str();
  c_sbm->add_option("--classes", sbm.spec.num_classes)->capture_default_str();
  c_sbm->add_option("--p-in", sbm.spec.p_in)->capture_default_str();
  c_sbm->add_option("--p-out", sbm.spec.p_out)->capture_default_str();
  c_sbm->add_option("--features", sbm.spec.feature_dim)->capture_default_str();
  c_sbm->add_option("--signal", sbm.spec.feature_signal, "distance between class means")->capture_default_str();
  c_sbm->add_option("--noise", sbm.spec.noise_std)->capture_default_str();
  c_sbm->add_option("--seed", sbm.spec.seed)->capture_default_str();
  c_sbm->callback([&] {
    action = [&] {
      cmd_gen_sbm(sbm, out);
      return kExitOk;
    };
  });

  StatsOptions stats;
  auto* c_stats = app.add_subcommand("stats", "dataset size and homophily metrics");
  c_stats->add_option("--data", stats.data)->required();
  c_stats->callback([&] {
    action = [&] {
      cmd_stats(stats, out);
      return kExitOk;
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    return report_error(err, "UsageError", e.what(), kExitValidation);
  }

  try {
    return action ? action() : kExitOk;
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    return report_error(err, std::string(to_string(e.code())), e.what(), code);
  } catch (const std::exception& e) {
    return report_error(err, "InvalidInput", e.what(), kExitValidation);
  }
}

}  // namespace saf::cli
