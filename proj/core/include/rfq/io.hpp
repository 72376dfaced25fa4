#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfq/bnt.hpp"
#include "rfq/ensemble.hpp"
#include "rfq/features.hpp"
#include "rfq/linear_models.hpp"
#include "rfq/market_sim.hpp"

namespace rfq::io {

inline constexpr const char* kDatasetHeader =
    "Time,Bond,Side,Notional,CounterParty,MidPrice,QuotedPrice,Competition,Status,NextMidPrice,Live";
inline constexpr int kSchemaVersion = 1;

/// Fixed-point with the given decimals ("%.6f" by default).
std::string fmt_fixed(double value, int decimals = 6);
/// Shortest text that reads back to the same double.
std::string fmt_exact(double value);

/// Writes to a sibling temporary file, then renames over path.
void atomic_write(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the bytes.
std::string fingerprint(std::string_view bytes);

std::string format_dataset(std::span<const sim::RfqRecord> records);
/// Throws ParseError naming the row (1-based data row) and column on bad input.
std::vector<sim::RfqRecord> parse_dataset(std::istream& in);
void write_dataset(const std::filesystem::path& path, std::span<const sim::RfqRecord> records);
std::vector<sim::RfqRecord> read_dataset(const std::filesystem::path& path);

/// Small CSV table builder for reports and plot data.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::string to_csv() const;
  void write(const std::filesystem::path& path) const { atomic_write(path, to_csv()); }
};

Table features_table(std::span<const sim::RfqRecord> records,
                     std::span<const features::FeatureRow> rows);

enum class ModelKind { bnt, lasso_logistic, next_mid, ensemble };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct EnsembleMemberRef {
  std::string name;
  std::string path;  // relative to the manifest's directory
};

/// Everything a model file holds. Exactly one of the model fields is set, matching kind.
struct ModelFile {
  int schema_version = kSchemaVersion;
  ModelKind kind = ModelKind::bnt;
  std::optional<features::StandardizationStats> features;
  std::uint64_t seed = 0;
  std::string training_fingerprint;

  std::optional<bnt::BntModel> bnt;
  std::optional<linear::LassoLogisticModel> lasso;
  std::optional<linear::NextMidModel> next_mid;
  std::optional<ensemble::EnsembleModel> ensemble;
  std::vector<EnsembleMemberRef> members;
};

std::string serialize_model(const ModelFile& model);
/// base_dir resolves ensemble member paths.
ModelFile deserialize_model(const std::string& text, const std::filesystem::path& base_dir);

/// For an ensemble only the manifest is written; members must be saved separately.
void save_model(const std::filesystem::path& path, const ModelFile& model);
/// Throws Error on a schema version mismatch, a kind other than expected, a
/// malformed file or a missing ensemble member (the message names the member).
ModelFile load_model(const std::filesystem::path& path,
                     std::optional<ModelKind> expected = std::nullopt);

}  // namespace rfq::io
