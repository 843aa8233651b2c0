#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "fixtures.hpp"
#include "relembed/csv.hpp"
#include "relembed/error.hpp"
#include "relembed/experiment.hpp"
#include "relembed/io.hpp"
#include "relembed/synthetic.hpp"

using namespace relembed;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Trained {
  PlantedDataset planted;
  Database db;
  std::vector<TargetedWalkScheme> schemes;
  EmbeddingModel model;

  Trained() {
    PlantedParams p;
    p.n_start = 30;
    planted = make_planted_dataset(p);
    db = planted.db.without_attribute(0, planted.db.schema().relation(0).attribute("y"));
    schemes = enumerate_targeted(db.schema(), 0, 1);
    TrainConfig cfg;
    cfg.dim = 6;
    cfg.epochs = 2;
    model = train(db, 0, schemes, cfg, KernelSet::defaults(db)).model;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("model round trip") {
  Trained t;
  const auto dir = fixtures::temp_dir("model");
  save_model(dir / "model.json", t.db, t.model);
  CHECK_FALSE(fs::exists(dir / "model.json.tmp"));
  CHECK(load_model(dir / "model.json", t.db) == t.model);

  // Facts are matched by key, so a reloaded dataset with other ids still works.
  write_dataset(dir / "data", t.db);
  auto rows = csv::read_file(dir / "data" / "P.csv");
  std::reverse(rows.begin() + 1, rows.end());
  std::ofstream out(dir / "data" / "P.csv");
  for (const auto& r : rows) csv::write_row(out, r);
  out.close();
  const auto reordered = Database::load(load_schema(dir / "data" / "schema.json"), dir / "data");
  const auto reloaded = load_model(dir / "model.json", reordered);
  for (FactId f : t.model.facts()) {
    const auto g = *reordered.find_by_key(0, t.db.key_of(f));
    CHECK(reloaded.phi(g) == t.model.phi(f));
  }
}

TEST_CASE("format versions are checked") {
  Trained t;
  auto j = model_to_json(t.db, t.model);
  j["format_version"] = kFormatVersion + 1;
  CHECK_THROWS_AS(model_from_json(t.db, j), FormatError);
  j["format_version"] = kFormatVersion;
  j["kind"] = "selection";
  CHECK_THROWS_AS(model_from_json(t.db, j), FormatError);
  CHECK_THROWS_AS(read_json(fixtures::temp_dir("missing") / "nope.json"), IntegrityError);
}

TEST_CASE("selection manifest round trip") {
  Trained t;
  const auto scores = score_length(t.schemes);
  const auto sel = select(scores, 0.5);
  const auto m = selection_manifest(t.db.schema(), t.schemes, sel, StrategyId::kLength, 3);
  CHECK(m["strategy"] == "length");
  CHECK(m["kept"].size() == 6);
  CHECK(kept_from_manifest(t.db.schema(), t.schemes, m) == sel.kept);
  auto bad = m;
  bad["kept"].push_back("Q[x]—[y]Z.w");
  CHECK_THROWS_AS(kept_from_manifest(t.db.schema(), t.schemes, bad), FormatError);

  const auto text = scores_csv(t.db.schema(), t.schemes, scores, sel);
  const auto rows = csv::parse(text);
  CHECK(rows[0] == csv::Row{"scheme_text", "target_attr", "strategy", "score", "rank", "diagnostics"});
  CHECK(rows.size() == t.schemes.size() + 1);
}

TEST_CASE("train config json") {
  TrainConfig c;
  c.dim = 7;
  c.learning_rate = 0.25;
  c.init = InitScheme::kUniform;
  const auto back = train_config_from_json(train_config_to_json(c));
  CHECK(back.dim == 7);
  CHECK(back.learning_rate == 0.25);
  CHECK(back.init == InitScheme::kUniform);
  CHECK_THROWS_AS(train_config_from_json(json{{"init", "weird"}}), SchemaError);
}

TEST_CASE("run manifest") {
  const auto dir = fixtures::temp_dir("manifest");
  RunManifest m(dir / "manifest.json", "train", json{{"a", 1}}, 5);
  CHECK(read_json(dir / "manifest.json")["status"] == "running");
  m.add_output(dir / "x.csv");
  m.finish("ok");
  const auto j = read_json(dir / "manifest.json");
  CHECK(j["status"] == "ok");
  CHECK(j["outputs"].size() == 1);
  CHECK(j["seed"] == 5);
  CHECK_NOTHROW(check_format(j, "run-manifest"));
}

TEST_CASE("experiment config parsing") {
  const auto base = fs::path("/data/run");
  const auto cfg = parse_experiment_config(
      json::parse(R"({"dataset_dir": "planted", "task": {"relation": "P", "attribute": "y"},
                      "strategies": ["kvar", "online"], "ratios": [0.5, 1.0], "lmax": 1,
                      "trainer": {"dim": 8}, "dynamic": {"fractions": [0.5]}})"),
      base);
  CHECK(cfg.dataset_dir == base / "planted");
  CHECK(cfg.schema_path == base / "planted" / "schema.json");
  CHECK(cfg.start == "P");
  CHECK(cfg.trainer.dim == 8);
  CHECK(cfg.strategies == std::vector<StrategyId>{StrategyId::kKVar, StrategyId::kOnline});
  CHECK(cfg.dynamic_fractions == std::vector<double>{0.5});

  CHECK_THROWS_AS(parse_experiment_config(json::parse(R"({"task": {"relation": "P", "attribute": "y"}})")),
                  SchemaError);
  CHECK_THROWS_AS(parse_experiment_config(json::parse(R"({"dataset_dir": "d", "ratios": [0]})")), SchemaError);
  CHECK_THROWS_AS(parse_experiment_config(json::parse(R"({"dataset_dir": "d", "strategies": ["x"]})")), SchemaError);
  CHECK_THROWS_AS(parse_experiment_config(json::parse(R"({"dataset_dir": "d", "dynamic": {"fractions": [1]}})")),
                  SchemaError);
}

TEST_CASE("small experiment end to end") {
  PlantedParams p;
  p.n_start = 60;
  const auto planted = make_planted_dataset(p);
  ExperimentConfig cfg = parse_experiment_config(
      json::parse(R"({"dataset_dir": "unused", "task": {"relation": "P", "attribute": "y"}, "lmax": 1,
                      "strategies": ["length", "online"], "ratios": [0.5, 1.0], "seeds": [0, 1], "folds": 5,
                      "trainer": {"dim": 8, "epochs": 3}, "dynamic": {"fractions": [0.3]}})"));
  const auto report = run_experiment(cfg, planted.db);
  CHECK(report.n_schemes == 12);
  CHECK(report.n_labelled == 60);
  REQUIRE(report.baseline_accuracy);
  CHECK(*report.alpha_star == 0.95 * *report.baseline_accuracy);
  // full x 2 seeds + (length, online) x r=0.5 x 2 seeds
  CHECK(report.cells.size() == 6);
  for (const auto& c : report.cells) {
    CHECK(c.ok);
    CHECK(c.curve.size() == 3);
    for (std::size_t i = 0; i < c.curve.size(); ++i) {
      CHECK(c.curve[i].accuracy >= 0.0);
      CHECK(c.curve[i].accuracy <= 1.0);
      if (i) CHECK(c.curve[i].time > c.curve[i - 1].time);
    }
    CHECK(c.kept == (c.strategy == kBaselineName ? 12u : 6u));
  }
  CHECK(report.ensembles.size() == 3);
  CHECK(report.best.count("length"));
  CHECK(report.dynamic.size() == 6);
  for (const auto& d : report.dynamic) {
    CHECK(d.ok);
    CHECK(d.inserted == 18);
  }

  const auto dir = fixtures::temp_dir("report");
  const auto written = write_report(dir, report);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "tstar.csv"));
  CHECK(fs::exists(dir / "dynamic.csv"));
  const auto j = read_json(dir / "report.json");
  CHECK_NOTHROW(check_format(j, "report"));
  const auto rows = csv::parse(plot_data_csv(j));
  CHECK(rows[0] == csv::Row{"strategy", "ratio", "seed", "time", "accuracy"});
  CHECK(rows.size() > 18);
  CHECK(slurp(dir / "tstar.csv").find("length") != std::string::npos);
}

TEST_CASE("experiment without a task is rejected") {
  ExperimentConfig cfg = parse_experiment_config(json::parse(R"({"dataset_dir": "d"})"));
  CHECK_THROWS_AS(run_experiment(cfg, fixtures::toy_db()), SchemaError);
}
