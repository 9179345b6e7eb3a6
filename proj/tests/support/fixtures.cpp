#include "fixtures.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace testing {

namespace fs = std::filesystem;

fs::path fixture_dir() { return ADAREC_FIXTURE_DIR; }

TempDir::TempDir(const std::string& tag) {
  std::string pattern = (fs::temp_directory_path() / (tag + "-XXXXXX")).string();
  if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

adarec::pipeline::RunConfig pipeline_config(const fs::path& dir, const adarec::synth::FixtureOptions& fixture,
                                            std::size_t eta1, std::size_t eta2) {
  const auto f = adarec::synth::make_pipeline_fixture(fixture);
  adarec::dataset::write_csv(f.train, dir / "train.csv");
  adarec::dataset::write_csv(f.test, dir / "test.csv");
  write_text(dir / "schema.json", f.train.schema().to_json().dump(2));
  nlohmann::json cfg = {{"train", "train.csv"}, {"test", "test.csv"}, {"schema", "schema.json"}, {"out", "out"},
                        {"eta1", eta1},          {"eta2", eta2},         {"backend", "mock"},         {"seed", fixture.seed}};
  return adarec::pipeline::RunConfig::from_json(cfg, dir);
}

std::pair<std::vector<int>, std::vector<int>> sample_joint(const std::vector<std::vector<double>>& p, std::size_t n,
                                                           std::mt19937_64& rng) {
  std::vector<double> flat;
  for (const auto& row : p) flat.insert(flat.end(), row.begin(), row.end());
  std::discrete_distribution<std::size_t> cell(flat.begin(), flat.end());
  const std::size_t cols = p.front().size();
  std::pair<std::vector<int>, std::vector<int>> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = cell(rng);
    out.first.push_back(static_cast<int>(c / cols));
    out.second.push_back(static_cast<int>(c % cols));
  }
  return out;
}

double closed_form_mi(const std::vector<std::vector<double>>& p) {
  std::vector<double> px(p.size(), 0.0), py(p.front().size(), 0.0);
  for (std::size_t x = 0; x < p.size(); ++x)
    for (std::size_t y = 0; y < p[x].size(); ++y) {
      px[x] += p[x][y];
      py[y] += p[x][y];
    }
  double mi = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x)
    for (std::size_t y = 0; y < p[x].size(); ++y)
      if (p[x][y] > 0) mi += p[x][y] * std::log(p[x][y] / (px[x] * py[y]));
  return mi;
}

}  // namespace testing
