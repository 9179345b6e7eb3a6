#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adarec/causal.hpp"
#include "adarec/dataset.hpp"
#include "adarec/error.hpp"

namespace adarec::synth {

class SynthError : public Error {
 public:
  enum class Kind { CyclicSpec, BadMechanism, InvalidSpec };
  SynthError(Kind kind, const std::string& message);
  Kind code() const noexcept { return code_; }

 private:
  Kind code_;
};

enum class MechanismKind { LinearGaussian, Logistic, Categorical };

struct Mechanism {
  MechanismKind kind = MechanismKind::LinearGaussian;
  std::map<std::string, double> weights;  // parent -> weight (linear / logistic)
  double intercept = 0.0;
  double noise_std = 1.0;  // linear only
  // Categorical: level names and, per parent configuration ("" for no parents,
  // otherwise comma-joined parent codes), a probability row over the levels.
  std::vector<std::string> levels;
  std::map<std::string, std::vector<double>> table;
};

struct Variable {
  std::string name;
  Mechanism mechanism;
  bool hidden = false;
};

struct ScmSpec {
  std::vector<Variable> variables;
  std::vector<std::pair<std::string, std::string>> edges;  // parent -> child
  std::string target;
  std::size_t n = 0;
  std::uint64_t seed = 0;

  // Throws CyclicSpec / BadMechanism / InvalidSpec.
  void validate() const;
  static ScmSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

struct Dag {
  std::vector<std::string> nodes;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<std::string> hidden;
  nlohmann::json to_json() const;
};

// Generated table. Discrete values (logistic 0/1, categorical level index)
// are stored as doubles.
struct SynthData {
  std::vector<std::string> names;  // visible variables, spec order
  std::vector<bool> categorical;
  std::vector<std::vector<std::string>> levels;  // categorical level names
  std::vector<std::vector<double>> columns;      // columns[var][row]
  std::string target;
  Dag dag;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  std::optional<std::size_t> index_of(const std::string& name) const;
};

std::uint64_t splitmix64(std::uint64_t x);

// Ancestral sampling; record r draws from a generator seeded with
// splitmix64(seed ^ r), so the output does not depend on `threads`.
SynthData generate(const ScmSpec& spec, unsigned threads = 1);

// Categorical variables are discrete; linear and 0/1 logistic ones numeric.
causal::DataMatrix to_matrix(const SynthData& data);

// Requires a binary target (logistic, or categorical with two levels).
// Rows [begin, end) become users u<row+1> (zero-padded to five digits).
dataset::Dataset to_dataset(const SynthData& data, std::size_t begin, std::size_t end,
                            dataset::Role role = dataset::Role::Train);

// Raw table CSV: user_id then every visible variable.
std::string to_csv(const SynthData& data);

struct FixtureOptions {
  std::size_t n_train = 1000;
  std::size_t n_test = 200;
  std::size_t n_features = 20;
  std::size_t n_correlates = 12;
  double causal_weight = 8.0;  // logistic weight of each causal feature
  double label_signal = 0.4;   // correlate mean shift per label value
  std::uint64_t seed = 42;
};

struct PipelineFixture {
  dataset::Dataset train;
  dataset::Dataset test;
  std::vector<std::string> causal;  // names of the label's causal features
  ScmSpec spec;
};

// Three standard-normal causal features drive a logistic label; correlates are
// children of the label (shifted by +/- label_signal) and the rest is noise.
ScmSpec pipeline_spec(const FixtureOptions& options);
PipelineFixture make_pipeline_fixture(const FixtureOptions& options = {});

}  // namespace adarec::synth
