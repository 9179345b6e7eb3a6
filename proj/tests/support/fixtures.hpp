#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "adarec/pipeline.hpp"
#include "adarec/synth.hpp"

namespace testing {

std::filesystem::path fixture_dir();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "adarec");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& content);

// Writes train.csv / test.csv / schema.json for the pipeline fixture into
// `dir` and returns a mock-backend config pointing at them (out = dir/out).
adarec::pipeline::RunConfig pipeline_config(const std::filesystem::path& dir, const adarec::synth::FixtureOptions& fixture,
                                            std::size_t eta1, std::size_t eta2);

// Samples n pairs from a joint probability table p[x][y].
std::pair<std::vector<int>, std::vector<int>> sample_joint(const std::vector<std::vector<double>>& p, std::size_t n,
                                                           std::mt19937_64& rng);

// Sum over cells of p log(p / (px py)), in nats.
double closed_form_mi(const std::vector<std::vector<double>>& p);

}  // namespace testing
