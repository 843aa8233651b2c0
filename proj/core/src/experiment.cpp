#include "relembed/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include "relembed/csv.hpp"
#include "relembed/error.hpp"
#include "relembed/io.hpp"
#include "relembed/random.hpp"

namespace relembed {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string num(double x) {
  std::ostringstream s;
  s << std::setprecision(10) << x;
  return s.str();
}

std::string ratio_tag(double r) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << r;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Runs jobs on `workers` threads; each job writes only its own slot.
void run_parallel(std::vector<std::function<void()>>& jobs, std::size_t workers) {
  if (workers <= 1 || jobs.size() <= 1) {
    for (auto& job : jobs) job();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, jobs.size()); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) jobs[i]();
    });
  }
  for (auto& t : pool) t.join();
}

struct Context {
  const ExperimentConfig* cfg;
  TaskData task;
  KernelSet kernels;
  std::vector<TargetedWalkScheme> schemes;
  FoldSplit split;
};

/// Kept scheme indices for one cell, or all of them for the baseline.
std::vector<std::size_t> choose_schemes(const Database& db, const std::vector<TargetedWalkScheme>& schemes,
                                        const KernelSet& kernels, const ExperimentConfig& cfg,
                                        std::optional<StrategyId> strategy, double ratio, const TrainConfig& tcfg) {
  std::vector<std::size_t> all(schemes.size());
  std::iota(all.begin(), all.end(), 0);
  if (!strategy || *strategy == StrategyId::kOnline) return all;
  auto scores = score_schemes(*strategy, db, schemes, tcfg, kernels, cfg.scoring);
  return select(scores, ratio).kept;
}

std::vector<TargetedWalkScheme> pick(const std::vector<TargetedWalkScheme>& schemes,
                                     const std::vector<std::size_t>& idx) {
  std::vector<TargetedWalkScheme> out;
  for (std::size_t i : idx) out.push_back(schemes[i]);
  return out;
}

TrainResult train_cell(const Database& db, RelationId start, const std::vector<TargetedWalkScheme>& schemes,
                       const TrainConfig& tcfg, const KernelSet& kernels, const ExperimentConfig& cfg,
                       std::optional<StrategyId> strategy, double ratio, const EpochCallback& cb) {
  if (strategy == StrategyId::kOnline) {
    OnlineConfig online{ratio, cfg.online_per_epoch, false};
    return online_elimination_train(db, start, schemes, tcfg, kernels, online, cb);
  }
  return train(db, start, schemes, tcfg, kernels, cb);
}

void run_cell(const Context& ctx, std::optional<StrategyId> strategy, CellResult& cell) {
  const auto& cfg = *ctx.cfg;
  try {
    TrainConfig tcfg = cfg.trainer;
    tcfg.seed = cell.seed;
    const auto t0 = std::chrono::steady_clock::now();
    const auto kept = choose_schemes(ctx.task.db, ctx.schemes, ctx.kernels, cfg, strategy, cell.ratio, tcfg);
    cell.scoring_seconds = strategy ? seconds_since(t0) : 0.0;
    cell.kept = strategy == StrategyId::kOnline ? kept_count(cell.ratio, kept.size()) : kept.size();

    double elapsed = 0.0;
    auto on_epoch = [&](const EpochStats& stats, const EmbeddingModel& model) {
      elapsed += stats.wall_time;
      const Eigen::MatrixXd x = embedding_matrix(model, ctx.task.facts);
      const double acc = cross_validate(x, ctx.task.labels, ctx.split, default_classifier(),
                                        derive_seed(cell.seed, "classifier"));
      cell.curve.push_back({elapsed, acc});
    };
    train_cell(ctx.task.db, ctx.task.relation, pick(ctx.schemes, kept), tcfg, ctx.kernels, cfg, strategy,
               cell.ratio, on_epoch);
    cell.mean_epoch_seconds = cell.curve.empty() ? 0.0 : elapsed / static_cast<double>(cell.curve.size());
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
}

/// Marks `seeds` and every fact that references a marked fact, transitively.
std::vector<bool> with_dependents(const Database& db, const std::vector<FactId>& seeds) {
  std::vector<bool> marked(db.size(), false);
  std::vector<FactId> stack(seeds.begin(), seeds.end());
  for (FactId f : seeds) marked[f] = true;
  const auto& fks = db.schema().foreign_keys();
  while (!stack.empty()) {
    const FactId f = stack.back();
    stack.pop_back();
    for (FkId fk = 0; fk < fks.size(); ++fk) {
      if (fks[fk].dst != db.fact(f).relation) continue;
      for (FactId src : db.backward(fk, f)) {
        if (!marked[src]) {
          marked[src] = true;
          stack.push_back(src);
        }
      }
    }
  }
  return marked;
}

void run_dynamic(const Context& ctx, std::optional<StrategyId> strategy, DynamicResult& out) {
  const auto& cfg = *ctx.cfg;
  try {
    const Database& db = ctx.task.db;
    const std::size_t n = ctx.task.facts.size();
    const auto n_delete = static_cast<std::size_t>(std::floor(out.fraction * static_cast<double>(n)));
    if (n_delete == 0 || n_delete >= n) throw SchemaError("deletion fraction leaves nothing to insert or train on");

    Rng rng = make_rng(out.seed, "dynamic", static_cast<std::uint64_t>(std::llround(out.fraction * 1e6)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> deleted_label(n, false);
    std::vector<FactId> doomed;
    for (std::size_t i = 0; i < n_delete; ++i) {
      deleted_label[order[i]] = true;
      doomed.push_back(ctx.task.facts[order[i]]);
    }
    const std::vector<bool> removed = with_dependents(db, doomed);
    std::vector<bool> keep(db.size());
    std::vector<NewFact> batch;
    for (FactId f = 0; f < db.size(); ++f) {
      keep[f] = !removed[f];
      if (removed[f]) batch.push_back({db.fact(f).relation, db.fact(f).values});
    }
    std::vector<FactId> old_to_new;
    const Database reduced = db.subset(keep, &old_to_new);

    TrainConfig tcfg = cfg.trainer;
    tcfg.seed = out.seed;
    const auto kept = choose_schemes(reduced, ctx.schemes, ctx.kernels, cfg, strategy, out.ratio, tcfg);
    TrainResult trained = train_cell(reduced, ctx.task.relation, pick(ctx.schemes, kept), tcfg, ctx.kernels, cfg,
                                     strategy, out.ratio, {});

    std::vector<FactId> train_facts;
    std::vector<int> train_labels;
    for (std::size_t i = 0; i < n; ++i) {
      if (deleted_label[i]) continue;
      train_facts.push_back(old_to_new[ctx.task.facts[i]]);
      train_labels.push_back(ctx.task.labels[i]);
    }
    auto clf = default_classifier()();
    clf->fit(embedding_matrix(trained.model, train_facts), train_labels, static_cast<int>(ctx.task.classes.size()),
             derive_seed(out.seed, "classifier"));

    const Database grown = reduced.insert_facts(batch);
    // Re-inserted facts get ids in batch order, which follows their old ids.
    std::vector<FactId> new_id(db.size(), kNoFact);
    FactId next = static_cast<FactId>(reduced.size());
    for (FactId f = 0; f < db.size(); ++f) {
      if (removed[f]) new_id[f] = next++;
    }
    std::vector<FactId> new_start;
    for (FactId f : grown.facts_of(ctx.task.relation)) {
      if (f >= reduced.size()) new_start.push_back(f);
    }
    ExtensionConfig ecfg = cfg.extension;
    ecfg.seed = derive_seed(out.seed, "extension");
    const EmbeddingModel extended = extend_embedding(grown, trained.model, new_start, ecfg, ctx.kernels);

    std::vector<FactId> test_facts;
    std::vector<int> test_labels;
    for (std::size_t i = 0; i < n; ++i) {
      if (!deleted_label[i]) continue;
      test_facts.push_back(new_id[ctx.task.facts[i]]);
      test_labels.push_back(ctx.task.labels[i]);
    }
    out.inserted = new_start.size();
    out.accuracy = accuracy(clf->predict(embedding_matrix(extended, test_facts)), test_labels);
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
}

json curve_json(const Curve& c) {
  json arr = json::array();
  for (const auto& p : c) arr.push_back({p.time, p.accuracy});
  return arr;
}

json opt_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

std::string curve_csv(const Curve& c) {
  std::ostringstream out;
  csv::write_row(out, {"time", "accuracy"});
  for (const auto& p : c) csv::write_row(out, {num(p.time), num(p.accuracy)});
  return out.str();
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j, const fs::path& base_dir) {
  ExperimentConfig cfg;
  cfg.raw = j;
  try {
    if (j.contains("dataset_dir")) cfg.dataset_dir = resolve(base_dir, j.at("dataset_dir").get<std::string>());
    if (j.contains("schema")) {
      cfg.schema_path = resolve(base_dir, j.at("schema").get<std::string>());
    } else if (!cfg.dataset_dir.empty()) {
      cfg.schema_path = cfg.dataset_dir / "schema.json";
    } else {
      throw SchemaError("experiment config: needs dataset_dir or schema");
    }
    if (j.contains("task")) {
      cfg.task.relation = j.at("task").at("relation").get<std::string>();
      cfg.task.attribute = j.at("task").at("attribute").get<std::string>();
    }
    cfg.start = j.value("start", cfg.task.relation);
    read_opt(j, "lmax", cfg.lmax);
    if (j.contains("trainer")) cfg.trainer = train_config_from_json(j.at("trainer"));
    if (j.contains("kernels")) cfg.kernel_overrides = j.at("kernels");
    if (j.contains("strategies")) {
      for (const auto& s : j.at("strategies")) cfg.strategies.push_back(parse_strategy(s.get<std::string>()));
    }
    read_opt(j, "ratios", cfg.ratios);
    read_opt(j, "seeds", cfg.seeds);
    read_opt(j, "folds", cfg.folds);
    read_opt(j, "split_seed", cfg.split_seed);
    read_opt(j, "workers", cfg.workers);
    if (j.contains("scoring")) {
      const auto& s = j.at("scoring");
      read_opt(s, "mi_walk_budget", cfg.scoring.mi_walk_budget);
      read_opt(s, "kvar_pair_budget", cfg.scoring.kvar_pair_budget);
      read_opt(s, "sampling_facts_per_scheme", cfg.scoring.sampling.facts_per_scheme);
      read_opt(s, "sampling_epochs", cfg.scoring.sampling.epochs);
    }
    if (j.contains("online")) read_opt(j.at("online"), "per_epoch_removals", cfg.online_per_epoch);
    if (j.contains("extension")) {
      const auto& e = j.at("extension");
      read_opt(e, "partners_per_scheme", cfg.extension.partners_per_scheme);
      read_opt(e, "samples_per_partner", cfg.extension.samples_per_partner);
      read_opt(e, "ridge", cfg.extension.ridge);
      read_opt(e, "retry_cap", cfg.extension.retry_cap);
      read_opt(e, "exhaustive_partners", cfg.extension.exhaustive_partners);
      if (e.contains("targets")) {
        const auto t = e.at("targets").get<std::string>();
        if (t == "exact") {
          cfg.extension.targets = TargetMode::kExact;
        } else if (t == "sampled") {
          cfg.extension.targets = TargetMode::kSampled;
        } else {
          throw SchemaError("extension targets must be 'sampled' or 'exact'");
        }
      }
    }
    if (j.contains("dynamic")) read_opt(j.at("dynamic"), "fractions", cfg.dynamic_fractions);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("experiment config: ") + e.what());
  }
  if (cfg.seeds.empty()) throw SchemaError("experiment config: no seeds");
  if (cfg.ratios.empty()) throw SchemaError("experiment config: no ratios");
  for (double r : cfg.ratios) {
    if (!(r > 0.0) || r > 1.0) throw SchemaError("experiment config: ratios must lie in (0, 1]");
  }
  for (double q : cfg.dynamic_fractions) {
    if (!(q > 0.0) || q >= 1.0) throw SchemaError("experiment config: dynamic fractions must lie in (0, 1)");
  }
  cfg.extension.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return parse_experiment_config(read_json(path), path.parent_path());
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.dataset_dir.empty()) throw SchemaError("experiment: no dataset_dir configured");
  return run_experiment(cfg, Database::load(load_schema(cfg.schema_path), cfg.dataset_dir));
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const Database& full) {
  if (cfg.task.relation.empty()) throw SchemaError("experiment: no prediction task configured");
  Context ctx{&cfg, prepare_task(full, cfg.task), {}, {}, {}};
  assert_label_free(ctx.task.db, cfg.task);
  ctx.kernels = KernelSet::defaults(ctx.task.db);
  ctx.kernels.apply_overrides(ctx.task.db.schema(), cfg.kernel_overrides);
  ctx.schemes = enumerate_targeted(ctx.task.db.schema(), ctx.task.relation, cfg.lmax);
  ctx.split = make_folds(ctx.task.labels, cfg.folds, cfg.split_seed);

  ExperimentReport report;
  report.n_schemes = ctx.schemes.size();
  report.n_labelled = ctx.task.facts.size();
  report.n_classes = ctx.task.classes.size();

  // Grid: the all-schemes baseline, then every strategy at every ratio below 1.
  struct Combo {
    std::string name;
    std::optional<StrategyId> strategy;
    double ratio;
  };
  std::vector<Combo> combos{{kBaselineName, std::nullopt, 1.0}};
  for (StrategyId s : cfg.strategies) {
    for (double r : cfg.ratios) {
      if (r < 1.0) combos.push_back({std::string(to_string(s)), s, r});
    }
  }

  std::vector<std::function<void()>> jobs;
  report.cells.reserve(combos.size() * cfg.seeds.size());
  for (const auto& combo : combos) {
    for (std::uint64_t seed : cfg.seeds) {
      CellResult cell;
      cell.strategy = combo.name;
      cell.ratio = combo.ratio;
      cell.seed = seed;
      report.cells.push_back(std::move(cell));
    }
  }
  for (std::size_t c = 0, i = 0; c < combos.size(); ++c) {
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s, ++i) {
      CellResult* cell = &report.cells[i];
      auto strategy = combos[c].strategy;
      jobs.push_back([&ctx, strategy, cell] { run_cell(ctx, strategy, *cell); });
    }
  }

  if (!cfg.dynamic_fractions.empty()) {
    for (const auto& combo : combos) {
      for (double q : cfg.dynamic_fractions) {
        for (std::uint64_t seed : cfg.seeds) {
          DynamicResult d;
          d.strategy = combo.name;
          d.ratio = combo.ratio;
          d.fraction = q;
          d.seed = seed;
          report.dynamic.push_back(d);
        }
      }
    }
    std::size_t i = 0;
    for (const auto& combo : combos) {
      for (std::size_t q = 0; q < cfg.dynamic_fractions.size(); ++q) {
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s, ++i) {
          DynamicResult* d = &report.dynamic[i];
          auto strategy = combo.strategy;
          jobs.push_back([&ctx, strategy, d] { run_dynamic(ctx, strategy, *d); });
        }
      }
    }
  }
  run_parallel(jobs, cfg.workers);

  for (std::size_t c = 0; c < combos.size(); ++c) {
    EnsembleResult ens;
    ens.strategy = combos[c].name;
    ens.ratio = combos[c].ratio;
    std::vector<Curve> curves;
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
      const auto& cell = report.cells[c * cfg.seeds.size() + s];
      if (!cell.ok) {
        ens.error = "seed " + std::to_string(cell.seed) + " failed: " + cell.error;
        break;
      }
      curves.push_back(cell.curve);
      ens.mean_scoring_seconds += cell.scoring_seconds / static_cast<double>(cfg.seeds.size());
      ens.mean_epoch_seconds += cell.mean_epoch_seconds / static_cast<double>(cfg.seeds.size());
    }
    if (ens.error.empty()) {
      try {
        ens.curve = ensemble_curve(curves, cfg.seeds.size());
        std::vector<double> finals;
        for (const auto& curve : curves) finals.push_back(curve.back().accuracy);
        ens.final_accuracy = ensemble_accuracy(finals);
        ens.ok = true;
      } catch (const std::exception& e) {
        ens.error = e.what();
      }
    }
    report.ensembles.push_back(std::move(ens));
  }

  if (report.ensembles.front().ok) {
    report.baseline_accuracy = report.ensembles.front().final_accuracy;
    report.alpha_star = alpha_star(*report.baseline_accuracy);
    std::map<std::string, std::map<double, std::optional<double>>> by_strategy;
    for (auto& ens : report.ensembles) {
      if (ens.ok) ens.t_star = time_to_threshold(ens.curve, *report.alpha_star);
      by_strategy[ens.strategy][ens.ratio] = ens.t_star;
    }
    // The baseline is every strategy's r = 1 point.
    for (auto& [name, grid] : by_strategy) {
      if (name != kBaselineName) grid.emplace(1.0, report.ensembles.front().t_star);
      report.best[name] = best_time_to_threshold(grid);
    }
  }
  return report;
}

json report_to_json(const ExperimentReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"strategy", c.strategy},
                     {"ratio", c.ratio},
                     {"seed", c.seed},
                     {"status", c.ok ? "ok" : "failed"},
                     {"error", c.error},
                     {"kept", c.kept},
                     {"scoring_seconds", c.scoring_seconds},
                     {"mean_epoch_seconds", c.mean_epoch_seconds},
                     {"curve", curve_json(c.curve)}});
  }
  json ensembles = json::array();
  for (const auto& e : report.ensembles) {
    ensembles.push_back({{"strategy", e.strategy},
                         {"ratio", e.ratio},
                         {"status", e.ok ? "ok" : "failed"},
                         {"error", e.error},
                         {"final_accuracy", opt_json(e.final_accuracy)},
                         {"t_star", opt_json(e.t_star)},
                         {"mean_scoring_seconds", e.mean_scoring_seconds},
                         {"mean_epoch_seconds", e.mean_epoch_seconds},
                         {"curve", curve_json(e.curve)}});
  }
  json best = json::object();
  for (const auto& [name, b] : report.best) best[name] = {{"t_star", opt_json(b.time)}, {"ratio", opt_json(b.ratio)}};
  json dynamic = json::array();
  for (const auto& d : report.dynamic) {
    dynamic.push_back({{"strategy", d.strategy},
                       {"ratio", d.ratio},
                       {"fraction", d.fraction},
                       {"seed", d.seed},
                       {"status", d.ok ? "ok" : "failed"},
                       {"error", d.error},
                       {"inserted", d.inserted},
                       {"accuracy", d.accuracy}});
  }
  return {{"format_version", kFormatVersion},
          {"kind", "report"},
          {"n_schemes", report.n_schemes},
          {"n_labelled", report.n_labelled},
          {"n_classes", report.n_classes},
          {"baseline_accuracy", opt_json(report.baseline_accuracy)},
          {"alpha_star", opt_json(report.alpha_star)},
          {"cells", cells},
          {"ensembles", ensembles},
          {"best", best},
          {"dynamic", dynamic}};
}

std::vector<fs::path> write_report(const fs::path& dir, const ExperimentReport& report) {
  std::vector<fs::path> written;
  auto put = [&](const fs::path& p, std::string_view text) {
    write_file_atomic(p, text);
    written.push_back(p);
  };
  write_json_atomic(dir / "report.json", report_to_json(report));
  written.push_back(dir / "report.json");
  for (const auto& c : report.cells) {
    if (!c.ok) continue;
    put(dir / "curves" / (c.strategy + "_r" + ratio_tag(c.ratio) + "_s" + std::to_string(c.seed) + ".csv"),
        curve_csv(c.curve));
  }
  for (const auto& e : report.ensembles) {
    if (!e.ok) continue;
    put(dir / "ensembles" / (e.strategy + "_r" + ratio_tag(e.ratio) + ".csv"), curve_csv(e.curve));
  }

  std::ostringstream table;
  csv::write_row(table, {"strategy", "ratio", "final_accuracy", "t_star", "mean_epoch_seconds",
                         "mean_scoring_seconds", "status"});
  for (const auto& e : report.ensembles) {
    csv::write_row(table, {e.strategy, ratio_tag(e.ratio), e.final_accuracy ? num(*e.final_accuracy) : "",
                           e.t_star ? num(*e.t_star) : "", num(e.mean_epoch_seconds), num(e.mean_scoring_seconds),
                           e.ok ? "ok" : "failed"});
  }
  put(dir / "tstar.csv", table.str());

  if (!report.dynamic.empty()) {
    std::ostringstream out;
    csv::write_row(out, {"strategy", "ratio", "fraction", "seed", "inserted", "accuracy", "status"});
    for (const auto& d : report.dynamic) {
      csv::write_row(out, {d.strategy, ratio_tag(d.ratio), num(d.fraction), std::to_string(d.seed),
                           std::to_string(d.inserted), d.ok ? num(d.accuracy) : "", d.ok ? "ok" : "failed"});
    }
    put(dir / "dynamic.csv", out.str());
  }
  return written;
}

std::string plot_data_csv(const json& report) {
  check_format(report, "report");
  std::ostringstream out;
  csv::write_row(out, {"strategy", "ratio", "seed", "time", "accuracy"});
  auto rows = [&](const json& item, const std::string& seed) {
    for (const auto& p : item.at("curve")) {
      csv::write_row(out, {item.at("strategy").get<std::string>(), num(item.at("ratio").get<double>()), seed,
                           num(p.at(0).get<double>()), num(p.at(1).get<double>())});
    }
  };
  for (const auto& c : report.at("cells")) rows(c, std::to_string(c.at("seed").get<std::uint64_t>()));
  for (const auto& e : report.at("ensembles")) rows(e, "ensemble");
  return out.str();
}

}  // namespace relembed
