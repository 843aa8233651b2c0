// relembed: command-line front end for relational tuple embeddings.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 data integrity or
// file format error, 4 numeric failure.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <tuple>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "relembed/error.hpp"
#include "relembed/evaluation.hpp"
#include "relembed/experiment.hpp"
#include "relembed/extension.hpp"
#include "relembed/io.hpp"
#include "relembed/random.hpp"
#include "relembed/selection.hpp"
#include "relembed/trainer.hpp"
#include "relembed/walks.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace relembed;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIntegrity = 3;
constexpr int kExitNumeric = 4;

std::vector<std::string> g_argv;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  std::string out_dir = ".";
};

/// Data options shared by the subcommands; they override the config file.
struct DataOpts {
  std::string schema, data, task, start;
  std::optional<std::size_t> lmax;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--schema", schema, "Schema descriptor (JSON)");
    cmd->add_option("--data", data, "Directory with one <relation>.csv per relation");
    cmd->add_option("--task", task, "Prediction attribute REL.ATTR, removed before embedding");
    cmd->add_option("--start", start, "Start relation (defaults to the task relation)");
    cmd->add_option("--lmax", lmax, "Maximum walk-scheme length");
  }
};

std::string absolute(const std::string& p) { return fs::absolute(p).string(); }

ExperimentConfig resolve_config(const Globals& g, const DataOpts& d) {
  json j = json::object();
  fs::path base;
  if (!g.config.empty()) {
    j = read_json(g.config);
    base = fs::absolute(g.config).parent_path();
  }
  if (!d.data.empty()) j["dataset_dir"] = absolute(d.data);
  if (!d.schema.empty()) j["schema"] = absolute(d.schema);
  if (!d.task.empty()) {
    const auto dot = d.task.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == d.task.size()) {
      throw SchemaError("--task expects REL.ATTR, got '" + d.task + "'");
    }
    j["task"] = {{"relation", d.task.substr(0, dot)}, {"attribute", d.task.substr(dot + 1)}};
  }
  if (!d.start.empty()) j["start"] = d.start;
  if (d.lmax) j["lmax"] = *d.lmax;
  ExperimentConfig cfg = parse_experiment_config(j, base);
  if (g.seed) {
    cfg.trainer.seed = *g.seed;
    cfg.extension.seed = *g.seed;
    cfg.split_seed = derive_seed(*g.seed, "split");
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) cfg.seeds[i] = derive_seed(*g.seed, "seed", i);
  }
  cfg.workers = g.workers;
  if (cfg.start.empty()) throw SchemaError("no start relation: pass --start or --task");
  return cfg;
}

/// Database seen by the embedding phase, plus the labels if there is a task.
struct Loaded {
  Database full;
  Database db;
  std::optional<TaskData> task;
  RelationId start = 0;
  KernelSet kernels;
};

Loaded load_data(const ExperimentConfig& cfg) {
  if (cfg.dataset_dir.empty()) throw SchemaError("no dataset: pass --data or set dataset_dir");
  Loaded out;
  out.full = Database::load(load_schema(cfg.schema_path), cfg.dataset_dir);
  if (!cfg.task.relation.empty()) {
    out.task = prepare_task(out.full, cfg.task);
    out.db = out.task->db;
  } else {
    out.db = out.full;
  }
  out.start = out.db.schema().relation_id(cfg.start);
  out.kernels = KernelSet::defaults(out.db);
  out.kernels.apply_overrides(out.db.schema(), cfg.kernel_overrides);
  return out;
}

std::string fmt(double x, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << x;
  return s.str();
}

std::string ratio_tag(double r) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << r;
  return s.str();
}

// -- subcommands

int cmd_schemes(const Globals& g, const DataOpts& d, bool stats) {
  const auto cfg = resolve_config(g, d);
  DatabaseSchema schema = load_schema(cfg.schema_path);
  if (!cfg.task.relation.empty()) {
    const RelationId rel = schema.relation_id(cfg.task.relation);
    schema = schema.without_attribute(rel, schema.relation(rel).attribute(cfg.task.attribute));
  }
  const auto schemes = enumerate_targeted(schema, schema.relation_id(cfg.start), cfg.lmax);
  double total_len = 0.0;
  for (const auto& tws : schemes) {
    std::cout << targeted_text(schema, tws) << "\n";
    total_len += static_cast<double>(tws.scheme.steps.size());
  }
  std::cout << "count " << schemes.size() << "\n";
  if (stats) {
    const double avg = schemes.empty() ? 0.0 : total_len / static_cast<double>(schemes.size());
    std::cout << "avg_length " << fmt(avg, 4) << "\n";
  }
  return 0;
}

int cmd_score(const Globals& g, const DataOpts& d, const std::string& strategy_name, std::vector<double> ratios) {
  const StrategyId strategy = parse_strategy(strategy_name);
  if (strategy == StrategyId::kOnline) {
    throw SchemaError("strategy 'online' is applied during training: use `train --online R K`");
  }
  auto cfg = resolve_config(g, d);
  if (ratios.empty()) ratios = cfg.ratios;
  RunManifest manifest(fs::path(g.out_dir) / "manifest_score.json", "score", cfg.raw, cfg.trainer.seed);
  manifest.set("argv", g_argv);
  const Loaded data = load_data(cfg);
  const auto schemes = enumerate_targeted(data.db.schema(), data.start, cfg.lmax);
  const auto scores = score_schemes(strategy, data.db, schemes, cfg.trainer, data.kernels, cfg.scoring);

  const fs::path scores_path = fs::path(g.out_dir) / ("scores_" + std::string(to_string(strategy)) + ".csv");
  write_file_atomic(scores_path, scores_csv(data.db.schema(), schemes, scores, select(scores, 1.0)));
  manifest.add_output(scores_path);
  for (double r : ratios) {
    const auto sel = select(scores, r);
    const fs::path p =
        fs::path(g.out_dir) / ("selection_" + std::string(to_string(strategy)) + "_r" + ratio_tag(r) + ".json");
    write_json_atomic(p, selection_manifest(data.db.schema(), schemes, sel, strategy, cfg.trainer.seed));
    manifest.add_output(p);
    std::cout << "ratio " << ratio_tag(r) << ": kept " << sel.kept.size() << " of " << schemes.size() << "\n";
  }
  std::cout << "scores written to " << scores_path.string() << "\n";
  manifest.finish("ok");
  return 0;
}

int cmd_train(const Globals& g, const DataOpts& d, const std::string& selection, const std::vector<double>& online,
              std::optional<std::size_t> epochs) {
  auto cfg = resolve_config(g, d);
  if (epochs) cfg.trainer.epochs = *epochs;
  RunManifest manifest(fs::path(g.out_dir) / "manifest_train.json", "train", cfg.raw, cfg.trainer.seed);
  manifest.set("argv", g_argv);
  const Loaded data = load_data(cfg);
  auto schemes = enumerate_targeted(data.db.schema(), data.start, cfg.lmax);
  if (!selection.empty()) {
    const auto kept = kept_from_manifest(data.db.schema(), schemes, read_json(selection));
    std::vector<TargetedWalkScheme> chosen;
    for (std::size_t i : kept) chosen.push_back(schemes[i]);
    schemes = std::move(chosen);
    manifest.set("selection", selection);
  }

  auto log = [](const EpochStats& st, const EmbeddingModel& model) {
    std::cout << "epoch " << st.epoch << "  loss " << fmt(st.mean_loss) << "  time " << fmt(st.wall_time, 4)
              << "s  active " << model.active_indices().size() << "\n";
  };
  TrainResult result;
  if (!online.empty()) {
    if (online.size() != 2 || online[1] < 1.0 || online[1] != std::floor(online[1])) {
      throw SchemaError("--online expects R K with K a positive integer");
    }
    OnlineConfig oc{online[0], static_cast<std::size_t>(online[1]), false};
    result = online_elimination_train(data.db, data.start, schemes, cfg.trainer, data.kernels, oc, log);
  } else {
    result = train(data.db, data.start, schemes, cfg.trainer, data.kernels, log);
  }

  const fs::path out(g.out_dir);
  save_model(out / "model.json", data.db, result.model);
  write_file_atomic(out / "epoch_log.csv", epoch_log_csv(data.db.schema(), result.model.schemes(), result.stats));
  write_file_atomic(out / "embeddings.csv", embeddings_csv(data.db, result.model, result.model.facts()));
  for (const char* name : {"model.json", "epoch_log.csv", "embeddings.csv"}) manifest.add_output(out / name);
  manifest.set("trainer", train_config_to_json(cfg.trainer));
  std::cout << "trained " << result.model.active_indices().size() << " of " << result.model.scheme_count()
            << " schemes; model written to " << (out / "model.json").string() << "\n";
  manifest.finish("ok");
  return 0;
}

int cmd_extend(const Globals& g, const DataOpts& d, const std::string& model_path, const std::string& new_dir,
               bool verify) {
  auto cfg = resolve_config(g, d);
  RunManifest manifest(fs::path(g.out_dir) / "manifest_extend.json", "extend", cfg.raw, cfg.extension.seed);
  manifest.set("argv", g_argv);
  if (cfg.dataset_dir.empty()) throw SchemaError("no dataset: pass --data or set dataset_dir");
  const Database base = Database::load(load_schema(cfg.schema_path), cfg.dataset_dir);

  // New facts are read against the full schema and checked on insertion.
  std::vector<NewFact> batch;
  for (RelationId r = 0; r < base.schema().relations().size(); ++r) {
    const fs::path p = fs::path(new_dir) / (base.schema().relation(r).name + ".csv");
    if (!fs::exists(p)) continue;
    auto facts = read_relation_csv(base.schema(), r, p);
    batch.insert(batch.end(), facts.begin(), facts.end());
  }
  Database grown = base.insert_facts(batch);
  if (!cfg.task.relation.empty()) grown = prepare_task(grown, cfg.task).db;
  const RelationId start = grown.schema().relation_id(cfg.start);

  // Kernels come from the pre-insertion data, as during training.
  Database base_view = cfg.task.relation.empty() ? base : prepare_task(base, cfg.task).db;
  KernelSet kernels = KernelSet::defaults(base_view);
  kernels.apply_overrides(base_view.schema(), cfg.kernel_overrides);

  const EmbeddingModel model = load_model(model_path, grown);
  std::vector<FactId> new_facts;
  for (FactId f : grown.facts_of(start)) {
    if (f >= base.size()) new_facts.push_back(f);
  }
  const EmbeddingModel extended =
      new_facts.empty() ? model : extend_embedding(grown, model, new_facts, cfg.extension, kernels);

  const fs::path out(g.out_dir);
  save_model(out / "model.json", grown, extended);
  write_file_atomic(out / "new_embeddings.csv", embeddings_csv(grown, extended, new_facts));
  manifest.add_output(out / "model.json");
  manifest.add_output(out / "new_embeddings.csv");
  std::cout << "extended " << new_facts.size() << " facts\n";

  int status = 0;
  if (verify) {
    const auto checks = verify_clones(grown, model, new_facts, kernels, cfg.extension.ridge);
    json results = json::array();
    for (const auto& c : checks) {
      const auto key = grown.key_of(c.new_fact);
      std::cout << "verify " << key.front().to_string() << ": ";
      if (!c.twin) {
        std::cout << "no structural twin\n";
        results.push_back({{"fact", key.front().to_string()}, {"twin", nullptr}});
        continue;
      }
      const bool pass = c.max_residual < 1e-6;
      std::cout << "twin " << grown.key_of(*c.twin).front().to_string() << " residual " << fmt(c.max_residual, 3)
                << (pass ? " PASS" : " FAIL") << "\n";
      results.push_back({{"fact", key.front().to_string()},
                         {"twin", grown.key_of(*c.twin).front().to_string()},
                         {"max_residual", c.max_residual},
                         {"pass", pass}});
      if (!pass) status = kExitNumeric;
    }
    manifest.set("verify", results);
  }
  manifest.finish(status == 0 ? "ok" : "failed");
  return status;
}

int cmd_evaluate(const Globals& g, const DataOpts& d, const std::string& model_path) {
  auto cfg = resolve_config(g, d);
  if (cfg.task.relation.empty()) throw SchemaError("evaluate needs a prediction task (--task REL.ATTR)");
  RunManifest manifest(fs::path(g.out_dir) / "manifest_evaluate.json", "evaluate", cfg.raw, cfg.split_seed);
  manifest.set("argv", g_argv);
  const Loaded data = load_data(cfg);
  const EmbeddingModel model = load_model(model_path, data.db);
  const TaskData& task = *data.task;
  std::vector<FactId> facts;
  std::vector<int> labels;
  for (std::size_t i = 0; i < task.facts.size(); ++i) {
    if (!model.has_fact(task.facts[i])) continue;
    facts.push_back(task.facts[i]);
    labels.push_back(task.labels[i]);
  }
  const FoldSplit split = make_folds(labels, cfg.folds, cfg.split_seed);
  const double acc = cross_validate(embedding_matrix(model, facts), labels, split, default_classifier(),
                                    derive_seed(cfg.trainer.seed, "classifier"));
  const fs::path out = fs::path(g.out_dir) / "evaluation.json";
  write_json_atomic(out, {{"format_version", kFormatVersion},
                          {"kind", "evaluation"},
                          {"accuracy", acc},
                          {"folds", cfg.folds},
                          {"samples", facts.size()},
                          {"stratified", split.stratified}});
  manifest.add_output(out);
  std::cout << "accuracy " << fmt(acc, 4) << " (" << cfg.folds << "-fold, " << facts.size() << " facts)\n";
  manifest.finish("ok");
  return 0;
}

std::vector<double> parse_fractions(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (std::string s : items) {
    if (s.rfind("q=", 0) == 0) s = s.substr(2);
    std::stringstream in(s);
    std::string part;
    while (std::getline(in, part, ',')) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(part, &used));
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw SchemaError("--dynamic expects fractions like q=0.5 or 0.1,0.5, got '" + part + "'");
      }
    }
  }
  return out;
}

int cmd_experiment(const Globals& g, const DataOpts& d, const std::vector<std::string>& dynamic) {
  auto cfg = resolve_config(g, d);
  if (!dynamic.empty()) {
    cfg.dynamic_fractions = parse_fractions(dynamic);
    cfg.raw["dynamic"] = {{"fractions", cfg.dynamic_fractions}};
  }
  for (double q : cfg.dynamic_fractions) {
    if (!(q > 0.0) || q >= 1.0) throw SchemaError("dynamic fractions must lie in (0, 1)");
  }
  const fs::path out(g.out_dir);
  RunManifest manifest(out / "manifest_experiment.json", "experiment", cfg.raw, cfg.split_seed);
  manifest.set("argv", g_argv);
  manifest.set("seeds", cfg.seeds);
  const ExperimentReport report = run_experiment(cfg);
  for (const auto& p : write_report(out, report)) manifest.add_output(p);

  std::cout << "schemes " << report.n_schemes << ", labelled facts " << report.n_labelled << "\n";
  if (report.alpha_star) {
    std::cout << "baseline accuracy " << fmt(*report.baseline_accuracy, 4) << ", alpha* " << fmt(*report.alpha_star, 4)
              << "\n";
  }
  std::cout << std::left << std::setw(10) << "strategy" << std::setw(8) << "ratio" << std::setw(10) << "accuracy"
            << std::setw(12) << "t*" << "epoch_s" << "\n";
  bool failures = false;
  for (const auto& e : report.ensembles) {
    std::cout << std::setw(10) << e.strategy << std::setw(8) << ratio_tag(e.ratio) << std::setw(10)
              << (e.final_accuracy ? fmt(*e.final_accuracy, 4) : "-") << std::setw(12)
              << (e.t_star ? fmt(*e.t_star, 4) : "-") << fmt(e.mean_epoch_seconds, 4);
    if (!e.ok) {
      std::cout << "  FAILED: " << e.error;
      failures = true;
    }
    std::cout << "\n";
  }
  for (const auto& [name, best] : report.best) {
    std::cout << "t*(" << name << ") = " << (best.time ? fmt(*best.time, 4) : "-")
              << (best.ratio ? " at r=" + ratio_tag(*best.ratio) : "") << "\n";
  }
  if (!report.dynamic.empty()) {
    std::map<std::tuple<std::string, double, double>, std::vector<double>> dyn;
    for (const auto& r : report.dynamic) {
      if (r.ok) dyn[{r.strategy, r.ratio, r.fraction}].push_back(r.accuracy);
    }
    for (const auto& [key, accs] : dyn) {
      std::cout << "dynamic " << std::get<0>(key) << " r=" << ratio_tag(std::get<1>(key)) << " q="
                << fmt(std::get<2>(key), 3) << " accuracy " << fmt(ensemble_accuracy(accs), 4) << "\n";
    }
  }
  std::cout << "report written to " << (out / "report.json").string() << "\n";
  manifest.finish(failures ? "failed" : "ok");
  return 0;
}

int cmd_plot_data(const Globals& g, const std::string& report_path, bool to_stdout) {
  const std::string text = plot_data_csv(read_json(report_path));
  if (to_stdout) {
    std::cout << text;
  } else {
    const fs::path out = fs::path(g.out_dir) / "plot_data.csv";
    write_file_atomic(out, text);
    std::cout << "plot data written to " << out.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  g_argv.assign(argv, argv + argc);
  CLI::App app{"Relational tuple embeddings with walk-scheme selection"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Root seed for every random stream");
  app.add_option("--workers", g.workers, "Parallel experiment cells")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", g.out_dir, "Directory for outputs");

  DataOpts data;
  std::function<int()> action;

  auto* schemes = app.add_subcommand("schemes", "List targeted walk schemes");
  data.add_to(schemes);
  bool stats = false;
  schemes->add_flag("--stats", stats, "Also print the average scheme length");
  schemes->callback([&] { action = [&] { return cmd_schemes(g, data, stats); }; });

  auto* score = app.add_subcommand("score", "Score schemes and write selection manifests");
  data.add_to(score);
  std::string strategy;
  std::vector<double> ratios;
  score->add_option("--strategy", strategy, "random|length|mi|kvar|1epoch|sampling")->required();
  score->add_option("--ratio", ratios, "Kept ratio(s); default from the config");
  score->callback([&] { action = [&] { return cmd_score(g, data, strategy, ratios); }; });

  auto* train_cmd = app.add_subcommand("train", "Train an embedding");
  data.add_to(train_cmd);
  std::string selection;
  std::vector<double> online;
  std::optional<std::size_t> epochs;
  train_cmd->add_option("--manifest", selection, "Selection manifest from `score`");
  train_cmd->add_option("--online", online, "Online elimination: ratio R, removals per epoch K")->expected(2);
  train_cmd->add_option("--epochs", epochs, "Override the configured epoch count");
  train_cmd->callback([&] { action = [&] { return cmd_train(g, data, selection, online, epochs); }; });

  auto* extend = app.add_subcommand("extend", "Embed newly inserted facts with the model frozen");
  data.add_to(extend);
  std::string model_path, new_dir;
  bool verify = false;
  extend->add_option("--model", model_path, "Model file from `train`")->required();
  extend->add_option("--new", new_dir, "Directory with <relation>.csv files of new facts")->required();
  extend->add_flag("--verify", verify, "Check structural clones against their twins");
  extend->callback([&] { action = [&] { return cmd_extend(g, data, model_path, new_dir, verify); }; });

  auto* evaluate = app.add_subcommand("evaluate", "Cross-validated accuracy of a model on the task");
  data.add_to(evaluate);
  std::string eval_model;
  evaluate->add_option("--model", eval_model, "Model file")->required();
  evaluate->callback([&] { action = [&] { return cmd_evaluate(g, data, eval_model); }; });

  auto* experiment = app.add_subcommand("experiment", "Run a strategy x ratio x seed grid");
  data.add_to(experiment);
  std::vector<std::string> dynamic;
  experiment->add_option("--dynamic", dynamic, "Also run the insertion protocol, e.g. q=0.5 or 0.1,0.5,0.9");
  experiment->callback([&] { action = [&] { return cmd_experiment(g, data, dynamic); }; });

  auto* plot = app.add_subcommand("plot-data", "Long-format curve CSV from a report");
  std::string report_path;
  bool to_stdout = false;
  plot->add_option("--report", report_path, "report.json from `experiment`")->required();
  plot->add_flag("--stdout", to_stdout, "Print instead of writing plot_data.csv");
  plot->callback([&] { action = [&] { return cmd_plot_data(g, report_path, to_stdout); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    return action();
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IntegrityError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIntegrity;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
