#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "relembed/database.hpp"
#include "relembed/model.hpp"
#include "relembed/selection.hpp"
#include "relembed/trainer.hpp"

namespace relembed {

/// Version stamped into every JSON artifact; readers reject other versions.
inline constexpr int kFormatVersion = 1;

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Throws FormatError unless j["format_version"] == kFormatVersion and j["kind"] == kind.
void check_format(const nlohmann::json& j, std::string_view kind, const std::filesystem::path& origin = {});

/// Writes schema.json and one <relation>.csv per relation into `dir`.
void write_dataset(const std::filesystem::path& dir, const Database& db);

/// Facts are keyed by their key tuple so a model can be reloaded against a
/// database with different fact ids (for example after insertions).
nlohmann::json model_to_json(const Database& db, const EmbeddingModel& model);
EmbeddingModel model_from_json(const Database& db, const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const Database& db, const EmbeddingModel& model);
EmbeddingModel load_model(const std::filesystem::path& path, const Database& db);

/// CSV: key attribute columns followed by e0..e{k-1}.
std::string embeddings_csv(const Database& db, const EmbeddingModel& model, std::span<const FactId> facts);

/// CSV: scheme_text,target_attr,strategy,score,rank,diagnostics (rank 1 = best).
std::string scores_csv(const DatabaseSchema& schema, const std::vector<TargetedWalkScheme>& schemes,
                       const std::vector<SchemeScore>& scores, const SelectionResult& ranked);

/// {format_version, kind, strategy, ratio, seed, kept, removed}, schemes as texts.
nlohmann::json selection_manifest(const DatabaseSchema& schema, const std::vector<TargetedWalkScheme>& schemes,
                                  const SelectionResult& sel, StrategyId strategy, std::uint64_t seed);

/// Indices into `schemes` of the manifest's kept list; throws FormatError on unknown texts.
std::vector<std::size_t> kept_from_manifest(const DatabaseSchema& schema,
                                            const std::vector<TargetedWalkScheme>& schemes,
                                            const nlohmann::json& manifest);

/// CSV: epoch,wall_time,mean_loss,samples_used,samples_skipped, then one
/// loss column per scheme (empty when the scheme was inactive).
std::string epoch_log_csv(const DatabaseSchema& schema, const std::vector<TargetedWalkScheme>& schemes,
                          const std::vector<EpochStats>& stats);

nlohmann::json train_config_to_json(const TrainConfig& cfg);
/// Fills fields present in j over `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Provenance of a CLI run. Written when the run starts, finalised at the end.
class RunManifest {
 public:
  RunManifest(std::filesystem::path path, std::string command, const nlohmann::json& config, std::uint64_t seed);

  void add_output(const std::filesystem::path& p);
  void set(const std::string& key, nlohmann::json value);
  /// status "ok" or "failed".
  void finish(std::string_view status);

  const nlohmann::json& json() const { return j_; }

 private:
  void write() const;

  std::filesystem::path path_;
  nlohmann::json j_;
};

std::string library_version();
std::string utc_timestamp();

}  // namespace relembed
