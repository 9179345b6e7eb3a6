#include "adarec/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "adarec/text.hpp"

namespace adarec::evaluation {

namespace {

const char* kind_name(EvaluationError::Kind kind) {
  switch (kind) {
    case EvaluationError::Kind::KeyMismatch: return "KeyMismatch";
    case EvaluationError::Kind::WrongBrandCount: return "WrongBrandCount";
    case EvaluationError::Kind::EmptyInput: return "EmptyInput";
    case EvaluationError::Kind::BadValue: return "BadValue";
  }
  return "EvaluationError";
}

template <typename A, typename B>
void check_keys(const std::map<std::string, A>& a, const std::map<std::string, B>& b) {
  if (a.empty() || b.empty()) throw EvaluationError(EvaluationError::Kind::EmptyInput, "no users to evaluate");
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end() && ib != b.end(); ++ia, ++ib)
    if (ia->first != ib->first) break;
  if (ia == a.end() && ib == b.end()) return;
  std::string id = ia == a.end() ? ib->first : ib == b.end() ? ia->first : std::min(ia->first, ib->first);
  throw EvaluationError(EvaluationError::Kind::KeyMismatch,
                        "prediction and truth user sets differ (first difference: '" + id + "', " +
                            std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " users)");
}

double ratio(std::size_t num, std::size_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

}  // namespace

EvaluationError::EvaluationError(Kind kind, const std::string& message)
    : Error("evaluation", kind_name(kind), message), code_(kind) {}

BinaryMetrics binary_metrics(const std::map<std::string, int>& predictions, const std::map<std::string, int>& truths) {
  check_keys(predictions, truths);
  BinaryMetrics m;
  for (const auto& [id, truth] : truths) {
    const int pred = predictions.at(id);
    if ((truth != 0 && truth != 1) || (pred != 0 && pred != 1))
      throw EvaluationError(EvaluationError::Kind::BadValue, "user '" + id + "' has a non-binary value");
    ++m.confusion[truth][pred];
  }
  m.n = truths.size();
  for (int c = 0; c < 2; ++c) {
    const std::size_t tp = m.confusion[c][c];
    const std::size_t predicted = m.confusion[0][c] + m.confusion[1][c];
    const std::size_t actual = m.confusion[c][0] + m.confusion[c][1];
    const double p = ratio(tp, predicted);
    const double r = ratio(tp, actual);
    const double f = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    m.per_class[c] = {100.0 * p, 100.0 * r, 100.0 * f};
  }
  m.precision = (m.per_class[0].precision + m.per_class[1].precision) / 2.0;
  m.recall = (m.per_class[0].recall + m.per_class[1].recall) / 2.0;
  m.f1 = (m.per_class[0].f1 + m.per_class[1].f1) / 2.0;
  return m;
}

CtrResult expected_ctr(const std::map<std::string, std::vector<std::string>>& predictions,
                       const std::map<std::string, dataset::BrandSet>& clicked, std::size_t top_n) {
  check_keys(predictions, clicked);
  if (top_n == 0) throw EvaluationError(EvaluationError::Kind::BadValue, "top_n must be positive");
  CtrResult r;
  double total = 0.0;
  for (const auto& [id, pred] : predictions) {
    const std::set<std::string> distinct(pred.begin(), pred.end());
    if (pred.size() != top_n || distinct.size() != top_n)
      throw EvaluationError(EvaluationError::Kind::WrongBrandCount,
                            "user '" + id + "' has " + std::to_string(distinct.size()) + " distinct of " +
                                std::to_string(pred.size()) + " brands, want " + std::to_string(top_n));
    const auto& truth = clicked.at(id);
    std::size_t hits = 0;
    for (const auto& b : distinct) hits += std::binary_search(truth.begin(), truth.end(), b) ? 1 : 0;
    const double fraction = static_cast<double>(hits) / static_cast<double>(top_n);
    r.per_user.emplace_back(id, fraction);
    total += fraction;
  }
  r.expected_ctr = 100.0 * total / static_cast<double>(predictions.size());
  return r;
}

nlohmann::json report_json(const BinaryMetrics& m) {
  nlohmann::json per_class = nlohmann::json::object();
  for (int c = 0; c < 2; ++c)
    per_class[std::to_string(c)] = {{"precision", m.per_class[c].precision},
                                    {"recall", m.per_class[c].recall},
                                    {"f1", m.per_class[c].f1}};
  return {{"task", "binary_response"},
          {"n", m.n},
          {"metrics", {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}}},
          {"per_class", per_class},
          {"confusion", m.confusion}};
}

nlohmann::json report_json(const CtrResult& r) {
  nlohmann::json per_user = nlohmann::json::array();
  for (const auto& [id, f] : r.per_user) per_user.push_back({{"user_id", id}, {"hit_fraction", f}});
  return {{"task", "brand_recommendation"},
          {"n", r.per_user.size()},
          {"metrics", {{"expected_ctr", r.expected_ctr}}},
          {"per_user", per_user}};
}

std::string table(const BinaryMetrics& m) {
  std::ostringstream out;
  auto row = [&out](const std::string& name, const ClassScores& s) {
    out << std::left << std::setw(8) << name << std::right << std::setw(11) << text::fixed(s.precision, 2)
        << std::setw(9) << text::fixed(s.recall, 2) << std::setw(9) << text::fixed(s.f1, 2) << "\n";
  };
  out << std::left << std::setw(8) << "class" << std::right << std::setw(11) << "precision" << std::setw(9) << "recall"
      << std::setw(9) << "f1" << "\n";
  row("0", m.per_class[0]);
  row("1", m.per_class[1]);
  row("macro", {m.precision, m.recall, m.f1});
  out << "n = " << m.n << "\n";
  return out.str();
}

std::string table(const CtrResult& r) {
  std::ostringstream out;
  out << "expected CTR " << text::fixed(r.expected_ctr, 2) << " over " << r.per_user.size() << " users\n";
  return out.str();
}

}  // namespace adarec::evaluation
