#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scpo/error.hpp"

namespace scpo {

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> log_softmax(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = x.maxCoeff();
  const Scalar lse = m + std::log((x.array() - m).exp().sum());
  return (x.array() - lse).matrix();
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& x) {
  return log_softmax(x).array().exp().matrix();
}

/// Categorical answer policy over a fixed-size answer domain per problem.
///
/// Logits for problem r are `table.row(r) + features(r) * head`: a per-problem
/// table plus a linear head over answer features that is shared across
/// problems. With feature_dim == 0 the model is purely tabular.
template <typename Scalar_>
class BasicPolicyModel {
 public:
  using Scalar = Scalar_;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicPolicyModel() = default;
  BasicPolicyModel(Eigen::Index answer_count, Eigen::Index feature_dim)
      : table_(0, answer_count),
        features_(0, feature_dim),
        head_(Vector::Zero(feature_dim)) {}

  Eigen::Index answer_count() const { return table_.cols(); }
  Eigen::Index feature_dim() const { return head_.size(); }
  Eigen::Index problem_count() const { return table_.rows(); }

  int version() const { return version_; }
  void set_version(int v) { version_ = v; }

  /// Appends a problem row; `features` is answer_count x feature_dim.
  template <typename RowDerived, typename FeatDerived>
  Eigen::Index add_problem(std::string id, std::vector<std::string> domain,
                           const Eigen::MatrixBase<RowDerived>& logits,
                           const Eigen::MatrixBase<FeatDerived>& features) {
    const Eigen::Index a = answer_count();
    if (static_cast<Eigen::Index>(domain.size()) != a || logits.size() != a ||
        features.rows() != a || features.cols() != feature_dim()) {
      throw std::invalid_argument("add_problem: shape mismatch for '" + id + "'");
    }
    if (rows_.count(id)) throw std::invalid_argument("duplicate problem id '" + id + "'");
    const Eigen::Index r = problem_count();
    table_.conservativeResize(r + 1, Eigen::NoChange);
    table_.row(r) = logits.transpose();
    features_.conservativeResize((r + 1) * a, Eigen::NoChange);
    features_.middleRows(r * a, a) = features;
    rows_.emplace(id, r);
    ids_.push_back(std::move(id));
    domains_.push_back(std::move(domain));
    return r;
  }

  template <typename RowDerived>
  Eigen::Index add_problem(std::string id, std::vector<std::string> domain,
                           const Eigen::MatrixBase<RowDerived>& logits) {
    return add_problem(std::move(id), std::move(domain), logits,
                       Matrix::Zero(answer_count(), feature_dim()));
  }

  bool has_problem(std::string_view id) const { return rows_.count(std::string(id)) != 0; }

  Eigen::Index row_of(std::string_view id) const {
    auto it = rows_.find(std::string(id));
    if (it == rows_.end()) throw UnknownAnswer("unknown problem '" + std::string(id) + "'");
    return it->second;
  }

  Eigen::Index answer_index(Eigen::Index row, std::string_view answer) const {
    const auto& d = domains_[static_cast<std::size_t>(row)];
    auto it = std::find(d.begin(), d.end(), answer);
    if (it == d.end()) {
      throw UnknownAnswer("answer '" + std::string(answer) + "' not in the domain of '" +
                          ids_[static_cast<std::size_t>(row)] + "'");
    }
    return it - d.begin();
  }

  const std::string& id(Eigen::Index row) const { return ids_[static_cast<std::size_t>(row)]; }
  const std::vector<std::string>& domain(Eigen::Index row) const {
    return domains_[static_cast<std::size_t>(row)];
  }

  Vector logits(Eigen::Index row) const {
    Vector out = table_.row(row).transpose();
    if (feature_dim() > 0) out.noalias() += features(row) * head_;
    return out;
  }
  Vector log_probs(Eigen::Index row) const { return log_softmax(logits(row)); }

  auto features(Eigen::Index row) const {
    return features_.middleRows(row * answer_count(), answer_count());
  }

  Matrix& table() { return table_; }
  const Matrix& table() const { return table_; }
  Vector& head() { return head_; }
  const Vector& head() const { return head_; }
  const Matrix& feature_matrix() const { return features_; }
  const std::vector<std::string>& ids() const { return ids_; }

  /// Applies a descent step for one row-gradient through both the table
  /// row and the shared head.
  template <typename GradDerived>
  void apply_row_gradient(Eigen::Index row, const Eigen::MatrixBase<GradDerived>& grad,
                          Scalar step) {
    table_.row(row).noalias() -= step * grad.transpose();
    if (feature_dim() > 0) head_.noalias() -= step * (features(row).transpose() * grad);
  }

  bool all_finite() const {
    return table_.allFinite() && head_.allFinite() && features_.allFinite();
  }

 private:
  Matrix table_;
  Matrix features_;
  Vector head_;
  std::vector<std::string> ids_;
  std::vector<std::vector<std::string>> domains_;
  std::unordered_map<std::string, Eigen::Index> rows_;
  int version_ = 0;
};

using PolicyModel = BasicPolicyModel<double>;

/// log p(answer | problem) in nats. Throws UnknownAnswer.
template <typename Scalar>
Scalar toy_logprob(const BasicPolicyModel<Scalar>& model, std::string_view problem_id,
                   std::string_view answer) {
  const auto row = model.row_of(problem_id);
  return model.log_probs(row)(model.answer_index(row, answer));
}

/// Character-level greedy decoding of the answer distribution: at each
/// position the continuation (next character or end of string) with the
/// largest total probability wins, ties to end-of-string then the smaller
/// character. This can disagree with the most probable whole answer when
/// probability mass is spread over answers that share a prefix.
template <typename Scalar>
Eigen::Index greedy_answer_index(const BasicPolicyModel<Scalar>& model, Eigen::Index row) {
  const auto probs = softmax(model.logits(row));
  const auto& dom = model.domain(row);
  std::vector<Eigen::Index> live(dom.size());
  for (std::size_t i = 0; i < live.size(); ++i) live[i] = static_cast<Eigen::Index>(i);
  std::size_t depth = 0;
  for (;;) {
    // key -1 marks end-of-string.
    std::map<int, std::pair<Scalar, std::vector<Eigen::Index>>> groups;
    for (auto a : live) {
      const auto& s = dom[static_cast<std::size_t>(a)];
      int key = s.size() == depth ? -1 : static_cast<unsigned char>(s[depth]);
      auto& g = groups[key];
      g.first += probs(a);
      g.second.push_back(a);
    }
    auto best = groups.begin();
    for (auto it = groups.begin(); it != groups.end(); ++it) {
      if (it->second.first > best->second.first) best = it;
    }
    if (best->first == -1) return best->second.second.front();
    live = std::move(best->second.second);
    ++depth;
  }
}

template <typename Scalar>
const std::string& greedy_answer(const BasicPolicyModel<Scalar>& model, Eigen::Index row) {
  return model.domain(row)[static_cast<std::size_t>(greedy_answer_index(model, row))];
}

}  // namespace scpo
