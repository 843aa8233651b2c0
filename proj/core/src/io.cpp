#include "relembed/io.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "relembed/csv.hpp"
#include "relembed/error.hpp"
#include "relembed/random.hpp"

#ifndef RELEMBED_VERSION
#define RELEMBED_VERSION "0.0.0"
#endif

namespace relembed {

namespace fs = std::filesystem;
using nlohmann::json;

std::string library_version() { return RELEMBED_VERSION; }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IntegrityError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IntegrityError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_json_atomic(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IntegrityError("missing file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void check_format(const json& j, std::string_view kind, const fs::path& origin) {
  const std::string where = origin.empty() ? std::string(kind) : origin.string();
  if (!j.is_object() || !j.contains("format_version")) throw FormatError(where + ": no format_version");
  const int v = j.at("format_version").get<int>();
  if (v != kFormatVersion) {
    throw FormatError(where + ": format_version " + std::to_string(v) + ", this build reads " +
                      std::to_string(kFormatVersion));
  }
  if (j.value("kind", "") != kind) throw FormatError(where + ": expected a " + std::string(kind) + " file");
}

void write_dataset(const fs::path& dir, const Database& db) {
  const auto& schema = db.schema();
  fs::create_directories(dir);
  write_json_atomic(dir / "schema.json", schema_to_json(schema));
  for (RelationId r = 0; r < schema.relations().size(); ++r) {
    const auto& rel = schema.relation(r);
    std::ostringstream out;
    std::vector<std::string> header;
    for (const auto& a : rel.attributes) header.push_back(a.name);
    csv::write_row(out, header);
    for (FactId f : db.facts_of(r)) {
      std::vector<std::string> row;
      for (const Value& v : db.fact(f).values) row.push_back(v.to_string());
      csv::write_row(out, row);
    }
    write_file_atomic(dir / (rel.name + ".csv"), out.str());
  }
}

json model_to_json(const Database& db, const EmbeddingModel& model) {
  const auto& schema = db.schema();
  json schemes = json::array();
  for (std::size_t s = 0; s < model.scheme_count(); ++s) {
    json entry = targeted_to_json(schema, model.scheme(s));
    entry["active"] = model.is_active(s);
    const auto& psi = model.psi(s);
    json rows = json::array();
    for (Eigen::Index i = 0; i < psi.rows(); ++i) {
      rows.push_back(std::vector<double>(psi.row(i).begin(), psi.row(i).end()));
    }
    entry["psi"] = std::move(rows);
    schemes.push_back(std::move(entry));
  }
  json facts = json::array();
  for (FactId f : model.facts()) {
    json key = json::array();
    for (const Value& v : db.key_of(f)) key.push_back(v.to_string());
    const auto row = model.phi(f);
    facts.push_back({{"key", key}, {"phi", std::vector<double>(row.begin(), row.end())}});
  }
  return {{"format_version", kFormatVersion},
          {"kind", "model"},
          {"start", schema.relation(model.start_relation()).name},
          {"dim", model.dim()},
          {"schemes", schemes},
          {"facts", facts}};
}

EmbeddingModel model_from_json(const Database& db, const json& j) {
  check_format(j, "model");
  const auto& schema = db.schema();
  try {
    const RelationId start = schema.relation_id(j.at("start").get<std::string>());
    const auto dim = j.at("dim").get<std::size_t>();
    const auto k = static_cast<Eigen::Index>(dim);
    EmbeddingModel model(start, dim);
    const auto& rel = schema.relation(start);
    for (const auto& entry : j.at("facts")) {
      const auto cells = entry.at("key").get<std::vector<std::string>>();
      if (cells.size() != rel.key.size()) throw FormatError("model: key arity mismatch");
      KeyTuple key;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        key.push_back(Value::parse(cells[i], rel.attributes[rel.key[i]].kind));
      }
      const auto id = db.find_by_key(start, key);
      if (!id) throw IntegrityError("model: fact with key '" + cells.front() + "' is not in the database");
      const auto phi = entry.at("phi").get<std::vector<double>>();
      if (phi.size() != dim) throw FormatError("model: embedding dimension mismatch");
      model.add_fact(*id, Eigen::Map<const Eigen::VectorXd>(phi.data(), k));
    }
    for (const auto& entry : j.at("schemes")) {
      TargetedWalkScheme tws = targeted_from_json(schema, entry);
      const auto rows = entry.at("psi").get<std::vector<std::vector<double>>>();
      if (rows.size() != dim) throw FormatError("model: scheme matrix dimension mismatch");
      Eigen::MatrixXd psi(k, k);
      for (Eigen::Index r = 0; r < k; ++r) {
        if (rows[static_cast<std::size_t>(r)].size() != dim) throw FormatError("model: scheme matrix dimension mismatch");
        for (Eigen::Index c = 0; c < k; ++c) psi(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      }
      model.add_scheme(tws, std::move(psi), entry.value("active", true));
    }
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model: ") + e.what());
  }
}

void save_model(const fs::path& path, const Database& db, const EmbeddingModel& model) {
  write_json_atomic(path, model_to_json(db, model));
}

EmbeddingModel load_model(const fs::path& path, const Database& db) {
  json j = read_json(path);
  check_format(j, "model", path);
  return model_from_json(db, j);
}

std::string embeddings_csv(const Database& db, const EmbeddingModel& model, std::span<const FactId> facts) {
  const auto& rel = db.schema().relation(model.start_relation());
  std::ostringstream out;
  out << std::setprecision(17);
  std::vector<std::string> header;
  for (AttrId a : rel.key) header.push_back(rel.attributes[a].name);
  for (std::size_t i = 0; i < model.dim(); ++i) header.push_back("e" + std::to_string(i));
  csv::write_row(out, header);
  for (FactId f : facts) {
    std::vector<std::string> row;
    for (const Value& v : db.key_of(f)) row.push_back(v.to_string());
    for (double x : model.phi(f)) {
      std::ostringstream cell;
      cell << std::setprecision(17) << x;
      row.push_back(cell.str());
    }
    csv::write_row(out, row);
  }
  return out.str();
}

std::string scores_csv(const DatabaseSchema& schema, const std::vector<TargetedWalkScheme>& schemes,
                       const std::vector<SchemeScore>& scores, const SelectionResult& ranked) {
  std::vector<std::size_t> rank(schemes.size(), 0);
  for (std::size_t i = 0; i < ranked.ranking.size(); ++i) rank[ranked.ranking[i]] = i + 1;
  std::ostringstream out;
  csv::write_row(out, {"scheme_text", "target_attr", "strategy", "score", "rank", "diagnostics"});
  for (const auto& sc : scores) {
    const auto& tws = schemes.at(sc.scheme);
    const auto& end = schema.relation(end_relation(schema, tws.scheme));
    std::ostringstream score;
    score << std::setprecision(17) << sc.score;
    csv::write_row(out, {scheme_text(schema, tws.scheme), end.attributes.at(tws.target).name,
                         std::string(to_string(sc.strategy)), score.str(), std::to_string(rank[sc.scheme]),
                         sc.diagnostic});
  }
  return out.str();
}

json selection_manifest(const DatabaseSchema& schema, const std::vector<TargetedWalkScheme>& schemes,
                        const SelectionResult& sel, StrategyId strategy, std::uint64_t seed) {
  auto texts = [&](const std::vector<std::size_t>& idx) {
    json arr = json::array();
    for (std::size_t i : idx) arr.push_back(targeted_text(schema, schemes.at(i)));
    return arr;
  };
  return {{"format_version", kFormatVersion},
          {"kind", "selection"},
          {"strategy", std::string(to_string(strategy))},
          {"ratio", sel.ratio},
          {"seed", seed},
          {"kept", texts(sel.kept)},
          {"removed", texts(sel.removed)}};
}

std::vector<std::size_t> kept_from_manifest(const DatabaseSchema& schema,
                                            const std::vector<TargetedWalkScheme>& schemes, const json& manifest) {
  check_format(manifest, "selection");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < schemes.size(); ++i) index.emplace(targeted_text(schema, schemes[i]), i);
  std::vector<std::size_t> kept;
  for (const auto& t : manifest.at("kept")) {
    auto it = index.find(t.get<std::string>());
    if (it == index.end()) throw FormatError("selection manifest names unknown scheme '" + t.get<std::string>() + "'");
    kept.push_back(it->second);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::string epoch_log_csv(const DatabaseSchema& schema, const std::vector<TargetedWalkScheme>& schemes,
                          const std::vector<EpochStats>& stats) {
  std::ostringstream out;
  std::vector<std::string> header{"epoch", "wall_time", "mean_loss", "samples_used", "samples_skipped"};
  for (const auto& tws : schemes) header.push_back(targeted_text(schema, tws));
  csv::write_row(out, header);
  for (const auto& st : stats) {
    auto num = [](double x) {
      std::ostringstream s;
      s << std::setprecision(10) << x;
      return s.str();
    };
    std::vector<std::string> row{std::to_string(st.epoch), num(st.wall_time), num(st.mean_loss),
                                 std::to_string(st.samples_used), std::to_string(st.samples_skipped)};
    for (std::size_t s = 0; s < schemes.size(); ++s) {
      row.push_back(s < st.epoch_loss.size() && st.epoch_loss[s] ? num(*st.epoch_loss[s]) : std::string());
    }
    csv::write_row(out, row);
  }
  return out.str();
}

json train_config_to_json(const TrainConfig& cfg) {
  return {{"dim", cfg.dim},
          {"n_samples", cfg.n_samples},
          {"epochs", cfg.epochs},
          {"learning_rate", cfg.learning_rate},
          {"seed", cfg.seed},
          {"retry_cap", cfg.retry_cap},
          {"init", cfg.init == InitScheme::kCentered ? "centered" : "uniform"}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig base) {
  if (j.is_null()) return base;
  if (!j.is_object()) throw SchemaError("trainer config must be an object");
  try {
    if (j.contains("dim")) base.dim = j.at("dim").get<std::size_t>();
    if (j.contains("n_samples")) base.n_samples = j.at("n_samples").get<std::size_t>();
    if (j.contains("epochs")) base.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("learning_rate")) base.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("retry_cap")) base.retry_cap = j.at("retry_cap").get<std::size_t>();
    if (j.contains("init")) {
      const auto init = j.at("init").get<std::string>();
      if (init == "centered") {
        base.init = InitScheme::kCentered;
      } else if (init == "uniform") {
        base.init = InitScheme::kUniform;
      } else {
        throw SchemaError("unknown init '" + init + "' (centered|uniform)");
      }
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("trainer config: ") + e.what());
  }
  base.validate();
  return base;
}

RunManifest::RunManifest(fs::path path, std::string command, const nlohmann::json& config, std::uint64_t seed)
    : path_(std::move(path)) {
  j_ = {{"format_version", kFormatVersion},
        {"kind", "run-manifest"},
        {"command", std::move(command)},
        {"version", library_version()},
        {"config_hash", fnv1a(config.dump())},
        {"config", config},
        {"seed", seed},
        {"started", utc_timestamp()},
        {"status", "running"},
        {"outputs", json::array()}};
  write();
}

void RunManifest::add_output(const fs::path& p) { j_["outputs"].push_back(p.string()); }

void RunManifest::set(const std::string& key, nlohmann::json value) { j_[key] = std::move(value); }

void RunManifest::finish(std::string_view status) {
  j_["status"] = status;
  j_["finished"] = utc_timestamp();
  write();
}

void RunManifest::write() const { write_json_atomic(path_, j_); }

}  // namespace relembed
