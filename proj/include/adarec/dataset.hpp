#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "adarec/error.hpp"

namespace adarec::dataset {

class DatasetError : public Error {
 public:
  enum class Kind { UnknownColumn, MissingColumn, TypeMismatch, DuplicateUserId, EmptyDataset, SchemaError, IoError };

  DatasetError(Kind kind, const std::string& message);
  Kind code() const noexcept { return code_; }
  // Populated for TypeMismatch: 1-based data row (header excluded) and column name.
  std::optional<std::size_t> row;
  std::optional<std::string> column;

 private:
  Kind code_;
};

enum class FeatureKind { Numeric, Categorical };
enum class TargetKind { Binary, BrandSet };
enum class Role { Train, Validation, Test };

struct FeatureDescriptor {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
  std::optional<std::string> description;

  // Description when present, else the name.
  const std::string& display() const { return description ? *description : name; }
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  // Throws SchemaError on empty/duplicate names or a target that shadows a feature.
  FeatureSchema(std::vector<FeatureDescriptor> features, std::string target_name, TargetKind target_kind);

  const std::vector<FeatureDescriptor>& features() const noexcept { return features_; }
  const std::string& target_name() const noexcept { return target_name_; }
  TargetKind target_kind() const noexcept { return target_kind_; }
  std::size_t size() const noexcept { return features_.size(); }
  std::optional<std::size_t> index_of(const std::string& name) const;

  std::size_t count(FeatureKind kind) const;

  static FeatureSchema from_json(const nlohmann::json& doc);
  static FeatureSchema load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

 private:
  std::vector<FeatureDescriptor> features_;
  std::string target_name_;
  TargetKind target_kind_ = TargetKind::Binary;
};

using Missing = std::monostate;
using FeatureValue = std::variant<Missing, double, std::string>;

inline bool is_missing(const FeatureValue& v) { return std::holds_alternative<Missing>(v); }

// Sorted, duplicate-free brand tokens.
using BrandSet = std::vector<std::string>;
using Label = std::variant<int, BrandSet>;

BrandSet make_brand_set(std::vector<std::string> tokens);
std::string label_to_string(const Label& label);

struct Record {
  std::string user_id;
  std::vector<FeatureValue> values;
  std::optional<Label> label;

  bool operator==(const Record&) const = default;
};

// Immutable after construction; the constructor validates every record
// against the schema and rejects duplicate user ids.
class Dataset {
 public:
  Dataset(FeatureSchema schema, std::vector<Record> records, Role role);

  const FeatureSchema& schema() const noexcept { return schema_; }
  const std::vector<Record>& records() const noexcept { return records_; }
  Role role() const noexcept { return role_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const Record* find(const std::string& user_id) const;
  // Records in the order given by `ids`; unknown ids are skipped.
  Dataset subset(const std::vector<std::string>& ids) const;

 private:
  FeatureSchema schema_;
  std::vector<Record> records_;
  Role role_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

Dataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema, Role role = Role::Train);
Dataset parse_csv(const std::string& content, const FeatureSchema& schema, Role role = Role::Train);
std::string to_csv(const Dataset& dataset);
void write_csv(const Dataset& dataset, const std::filesystem::path& path);

struct NumericStats {
  double mean = 0, std_dev = 0, min = 0, max = 0, q25 = 0, median = 0, q75 = 0;
};

struct DistributionSummary {
  std::string feature_name;
  std::optional<std::string> description;
  FeatureKind kind = FeatureKind::Numeric;
  std::optional<NumericStats> numeric;  // empty when kind is categorical or nothing is present
  std::vector<std::pair<std::string, std::size_t>> frequencies;  // categorical: count desc, then token
  std::optional<std::string> mode;
  std::size_t n_present = 0;
  std::size_t n_missing = 0;

  const std::string& display() const { return description ? *description : feature_name; }
};

// Nearest-rank percentile: the value at rank ceil(p * n) (1-based) of sorted values.
double nearest_rank(const std::vector<double>& sorted, double p);

std::vector<DistributionSummary> compute_summaries(const Dataset& dataset);
nlohmann::json summaries_to_json(const std::vector<DistributionSummary>& summaries);

}  // namespace adarec::dataset
