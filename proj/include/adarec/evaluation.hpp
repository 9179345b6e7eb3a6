#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "adarec/dataset.hpp"
#include "adarec/error.hpp"

namespace adarec::evaluation {

class EvaluationError : public Error {
 public:
  enum class Kind { KeyMismatch, WrongBrandCount, EmptyInput, BadValue };
  EvaluationError(Kind kind, const std::string& message);
  Kind code() const noexcept { return code_; }

 private:
  Kind code_;
};

struct ClassScores {
  double precision = 0.0;  // percentages
  double recall = 0.0;
  double f1 = 0.0;
};

struct BinaryMetrics {
  double precision = 0.0;  // macro, percentage
  double recall = 0.0;
  double f1 = 0.0;
  std::array<ClassScores, 2> per_class{};
  // confusion[truth][prediction]
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  std::size_t n = 0;
};

BinaryMetrics binary_metrics(const std::map<std::string, int>& predictions, const std::map<std::string, int>& truths);

struct CtrResult {
  double expected_ctr = 0.0;  // percentage
  std::vector<std::pair<std::string, double>> per_user;  // sorted by user id
};

CtrResult expected_ctr(const std::map<std::string, std::vector<std::string>>& predictions,
                       const std::map<std::string, dataset::BrandSet>& clicked, std::size_t top_n = 3);

nlohmann::json report_json(const BinaryMetrics& m);
nlohmann::json report_json(const CtrResult& r);
std::string table(const BinaryMetrics& m);
std::string table(const CtrResult& r);

}  // namespace adarec::evaluation
