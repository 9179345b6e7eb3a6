#include "adarec/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "adarec/text.hpp"

namespace adarec::dataset {

namespace {

const char* kind_name(DatasetError::Kind kind) {
  switch (kind) {
    case DatasetError::Kind::UnknownColumn: return "UnknownColumn";
    case DatasetError::Kind::MissingColumn: return "MissingColumn";
    case DatasetError::Kind::TypeMismatch: return "TypeMismatch";
    case DatasetError::Kind::DuplicateUserId: return "DuplicateUserId";
    case DatasetError::Kind::EmptyDataset: return "EmptyDataset";
    case DatasetError::Kind::SchemaError: return "SchemaError";
    case DatasetError::Kind::IoError: return "IoError";
  }
  return "DatasetError";
}

constexpr const char* kIdColumn = "user_id";
constexpr const char* kLabelColumn = "label";

std::optional<double> parse_number(const std::string& cell) {
  const std::string trimmed = text::trim(cell);
  if (trimmed.empty()) return std::nullopt;
  double value = 0;
  const char* first = trimmed.data();
  const char* last = first + trimmed.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) return std::nullopt;
  return value;
}

// RFC 4180 style: quoted fields may hold commas, doubled quotes and newlines.
std::vector<std::vector<std::string>> parse_rows(const std::string& content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_has_content = false;
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_has_content = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_has_content || !field.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        row_has_content = false;
        break;
      default:
        field.push_back(c);
        row_has_content = true;
    }
  }
  if (row_has_content || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string quote_csv(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

DatasetError type_mismatch(std::size_t row, const std::string& column, const std::string& cell) {
  DatasetError err(DatasetError::Kind::TypeMismatch,
                   "row " + std::to_string(row) + ", column '" + column + "': cannot parse '" + cell + "'");
  err.row = row;
  err.column = column;
  return err;
}

}  // namespace

DatasetError::DatasetError(Kind kind, const std::string& message)
    : Error("dataset", kind_name(kind), message), code_(kind) {}

FeatureSchema::FeatureSchema(std::vector<FeatureDescriptor> features, std::string target_name,
                             TargetKind target_kind)
    : features_(std::move(features)), target_name_(std::move(target_name)), target_kind_(target_kind) {
  std::set<std::string> seen;
  for (const auto& f : features_) {
    if (f.name.empty()) throw DatasetError(DatasetError::Kind::SchemaError, "feature name is empty");
    if (f.name == kIdColumn || f.name == kLabelColumn)
      throw DatasetError(DatasetError::Kind::SchemaError, "feature name '" + f.name + "' is reserved");
    if (!seen.insert(f.name).second)
      throw DatasetError(DatasetError::Kind::SchemaError, "duplicate feature name '" + f.name + "'");
  }
  if (target_name_.empty()) throw DatasetError(DatasetError::Kind::SchemaError, "target name is empty");
  if (seen.count(target_name_))
    throw DatasetError(DatasetError::Kind::SchemaError, "target '" + target_name_ + "' is also a feature");
}

std::optional<std::size_t> FeatureSchema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].name == name) return i;
  return std::nullopt;
}

std::size_t FeatureSchema::count(FeatureKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(features_.begin(), features_.end(), [kind](const auto& f) { return f.kind == kind; }));
}

FeatureSchema FeatureSchema::from_json(const nlohmann::json& doc) {
  try {
    std::vector<FeatureDescriptor> features;
    for (const auto& f : doc.at("features")) {
      FeatureDescriptor d;
      d.name = f.at("name").get<std::string>();
      const auto kind = f.at("kind").get<std::string>();
      if (kind == "numeric") {
        d.kind = FeatureKind::Numeric;
      } else if (kind == "categorical") {
        d.kind = FeatureKind::Categorical;
      } else {
        throw DatasetError(DatasetError::Kind::SchemaError, "feature '" + d.name + "' has unknown kind '" + kind + "'");
      }
      if (f.contains("description") && !f.at("description").is_null())
        d.description = f.at("description").get<std::string>();
      features.push_back(std::move(d));
    }
    const auto& target = doc.at("target");
    const auto tkind = target.at("kind").get<std::string>();
    TargetKind target_kind;
    if (tkind == "binary") {
      target_kind = TargetKind::Binary;
    } else if (tkind == "brand_set") {
      target_kind = TargetKind::BrandSet;
    } else {
      throw DatasetError(DatasetError::Kind::SchemaError, "unknown target kind '" + tkind + "'");
    }
    return FeatureSchema(std::move(features), target.at("name").get<std::string>(), target_kind);
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(DatasetError::Kind::SchemaError, std::string("malformed schema: ") + e.what());
  }
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(DatasetError::Kind::IoError, "cannot open schema " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(DatasetError::Kind::SchemaError, path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json FeatureSchema::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : features_) {
    nlohmann::json d = {{"name", f.name}, {"kind", f.kind == FeatureKind::Numeric ? "numeric" : "categorical"}};
    if (f.description) d["description"] = *f.description;
    features.push_back(std::move(d));
  }
  return {{"features", features},
          {"target", {{"name", target_name_}, {"kind", target_kind_ == TargetKind::Binary ? "binary" : "brand_set"}}}};
}

BrandSet make_brand_set(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

std::string label_to_string(const Label& label) {
  if (const int* b = std::get_if<int>(&label)) return std::to_string(*b);
  return text::join(std::get<BrandSet>(label), "|");
}

Dataset::Dataset(FeatureSchema schema, std::vector<Record> records, Role role)
    : schema_(std::move(schema)), records_(std::move(records)), role_(role) {
  const auto& features = schema_.features();
  for (std::size_t r = 0; r < records_.size(); ++r) {
    const auto& rec = records_[r];
    if (rec.values.size() != features.size())
      throw DatasetError(DatasetError::Kind::SchemaError,
                         "record '" + rec.user_id + "' has " + std::to_string(rec.values.size()) + " values, schema has " +
                             std::to_string(features.size()));
    for (std::size_t c = 0; c < features.size(); ++c) {
      const auto& v = rec.values[c];
      const bool ok = is_missing(v) ||
                      (features[c].kind == FeatureKind::Numeric && std::holds_alternative<double>(v) &&
                       std::isfinite(std::get<double>(v))) ||
                      (features[c].kind == FeatureKind::Categorical && std::holds_alternative<std::string>(v));
      if (!ok) throw type_mismatch(r + 1, features[c].name, "<value of wrong kind>");
    }
    if (rec.label) {
      const bool binary = std::holds_alternative<int>(*rec.label);
      if (binary != (schema_.target_kind() == TargetKind::Binary))
        throw DatasetError(DatasetError::Kind::SchemaError, "record '" + rec.user_id + "' label kind does not match schema");
      if (binary && std::get<int>(*rec.label) != 0 && std::get<int>(*rec.label) != 1)
        throw type_mismatch(r + 1, kLabelColumn, std::to_string(std::get<int>(*rec.label)));
    }
    if (!by_id_.emplace(rec.user_id, r).second)
      throw DatasetError(DatasetError::Kind::DuplicateUserId,
                         "duplicate user_id '" + rec.user_id + "' at row " + std::to_string(r + 1));
  }
}

const Record* Dataset::find(const std::string& user_id) const {
  auto it = by_id_.find(user_id);
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

Dataset Dataset::subset(const std::vector<std::string>& ids) const {
  std::vector<Record> out;
  out.reserve(ids.size());
  for (const auto& id : ids)
    if (const Record* r = find(id)) out.push_back(*r);
  return Dataset(schema_, std::move(out), role_);
}

Dataset parse_csv(const std::string& content, const FeatureSchema& schema, Role role) {
  auto rows = parse_rows(content);
  if (rows.empty()) throw DatasetError(DatasetError::Kind::MissingColumn, "CSV has no header row");
  const auto& header = rows.front();

  std::optional<std::size_t> id_col, label_col;
  std::vector<std::optional<std::size_t>> feature_col(schema.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = text::trim(header[c]);
    if (name == kIdColumn && !id_col) {
      id_col = c;
    } else if (name == kLabelColumn && !label_col) {
      label_col = c;
    } else if (auto idx = schema.index_of(name); idx && !feature_col[*idx]) {
      feature_col[*idx] = c;
    } else {
      throw DatasetError(DatasetError::Kind::UnknownColumn, "unknown or repeated column '" + name + "'");
    }
  }
  if (!id_col) throw DatasetError(DatasetError::Kind::MissingColumn, "missing column 'user_id'");
  for (std::size_t f = 0; f < schema.size(); ++f)
    if (!feature_col[f])
      throw DatasetError(DatasetError::Kind::MissingColumn, "missing column '" + schema.features()[f].name + "'");

  std::vector<Record> records;
  records.reserve(rows.size() - 1);
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto& row = rows[r];
    if (row.size() != header.size())
      throw DatasetError(DatasetError::Kind::TypeMismatch,
                         "row " + std::to_string(r) + " has " + std::to_string(row.size()) + " cells, header has " +
                             std::to_string(header.size()));
    Record rec;
    rec.user_id = row[*id_col];
    if (!seen.emplace(rec.user_id, r).second)
      throw DatasetError(DatasetError::Kind::DuplicateUserId,
                         "duplicate user_id '" + rec.user_id + "' at row " + std::to_string(r));
    rec.values.reserve(schema.size());
    for (std::size_t f = 0; f < schema.size(); ++f) {
      const auto& desc = schema.features()[f];
      const std::string& cell = row[*feature_col[f]];
      if (cell.empty()) {
        rec.values.emplace_back(Missing{});
      } else if (desc.kind == FeatureKind::Numeric) {
        auto value = parse_number(cell);
        if (!value) throw type_mismatch(r, desc.name, cell);
        rec.values.emplace_back(*value);
      } else {
        rec.values.emplace_back(cell);
      }
    }
    if (label_col && !row[*label_col].empty()) {
      const std::string& cell = row[*label_col];
      if (schema.target_kind() == TargetKind::Binary) {
        const std::string t = text::trim(cell);
        if (t == "0") {
          rec.label = Label{0};
        } else if (t == "1") {
          rec.label = Label{1};
        } else {
          throw type_mismatch(r, kLabelColumn, cell);
        }
      } else {
        std::vector<std::string> tokens;
        for (auto& tok : text::split(cell, '|')) {
          auto t = text::trim(tok);
          if (!t.empty()) tokens.push_back(std::move(t));
        }
        rec.label = Label{make_brand_set(std::move(tokens))};
      }
    }
    records.push_back(std::move(rec));
  }
  return Dataset(schema, std::move(records), role);
}

Dataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema, Role role) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError(DatasetError::Kind::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema, role);
}

std::string to_csv(const Dataset& dataset) {
  std::string out = kIdColumn;
  for (const auto& f : dataset.schema().features()) out += "," + quote_csv(f.name);
  out += std::string(",") + kLabelColumn + "\n";
  for (const auto& rec : dataset.records()) {
    out += quote_csv(rec.user_id);
    for (const auto& v : rec.values) {
      out.push_back(',');
      if (const double* d = std::get_if<double>(&v)) {
        out += text::shortest(*d);
      } else if (const std::string* s = std::get_if<std::string>(&v)) {
        out += quote_csv(*s);
      }
    }
    out.push_back(',');
    if (rec.label) out += quote_csv(label_to_string(*rec.label));
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError(DatasetError::Kind::IoError, "cannot write " + path.string());
  out << to_csv(dataset);
}

double nearest_rank(const std::vector<double>& sorted, double p) {
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

std::vector<DistributionSummary> compute_summaries(const Dataset& dataset) {
  if (dataset.empty()) throw DatasetError(DatasetError::Kind::EmptyDataset, "cannot summarize an empty dataset");
  const auto& features = dataset.schema().features();
  std::vector<DistributionSummary> out;
  out.reserve(features.size());
  for (std::size_t f = 0; f < features.size(); ++f) {
    DistributionSummary s;
    s.feature_name = features[f].name;
    s.description = features[f].description;
    s.kind = features[f].kind;
    if (features[f].kind == FeatureKind::Numeric) {
      std::vector<double> values;
      for (const auto& rec : dataset.records())
        if (const double* d = std::get_if<double>(&rec.values[f])) values.push_back(*d);
      std::sort(values.begin(), values.end());
      s.n_present = values.size();
      s.n_missing = dataset.size() - values.size();
      if (!values.empty()) {
        // Sorted order makes the sums independent of record order.
        const double n = static_cast<double>(values.size());
        double sum = 0;
        for (double v : values) sum += v;
        const double mean = sum / n;
        double ss = 0;
        for (double v : values) ss += (v - mean) * (v - mean);
        NumericStats st;
        st.mean = mean;
        st.std_dev = std::sqrt(ss / n);
        st.min = values.front();
        st.max = values.back();
        st.q25 = nearest_rank(values, 0.25);
        st.median = nearest_rank(values, 0.5);
        st.q75 = nearest_rank(values, 0.75);
        s.numeric = st;
      }
    } else {
      std::map<std::string, std::size_t> counts;
      for (const auto& rec : dataset.records()) {
        if (const std::string* t = std::get_if<std::string>(&rec.values[f])) {
          ++counts[*t];
          ++s.n_present;
        } else {
          ++s.n_missing;
        }
      }
      s.frequencies.assign(counts.begin(), counts.end());
      std::stable_sort(s.frequencies.begin(), s.frequencies.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      if (!s.frequencies.empty()) s.mode = s.frequencies.front().first;
    }
    out.push_back(std::move(s));
  }
  return out;
}

nlohmann::json summaries_to_json(const std::vector<DistributionSummary>& summaries) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : summaries) {
    nlohmann::json j = {{"feature", s.feature_name}, {"n_present", s.n_present}, {"n_missing", s.n_missing}};
    if (s.kind == FeatureKind::Numeric) {
      j["kind"] = "numeric";
      if (s.numeric) {
        const auto& st = *s.numeric;
        j["mean"] = st.mean;
        j["std_dev"] = st.std_dev;
        j["min"] = st.min;
        j["max"] = st.max;
        j["q25"] = st.q25;
        j["median"] = st.median;
        j["q75"] = st.q75;
      }
    } else {
      j["kind"] = "categorical";
      nlohmann::json freq = nlohmann::json::array();
      for (const auto& [token, count] : s.frequencies) freq.push_back({{"token", token}, {"count", count}});
      j["frequencies"] = freq;
      if (s.mode) j["mode"] = *s.mode;
    }
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace adarec::dataset
