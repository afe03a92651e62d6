#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <string_view>

#include "scpo/error.hpp"
#include "scpo/pairs.hpp"
#include "scpo/policy.hpp"

namespace scpo {

enum class Objective { Scpo, Unweighted, Lmsi };
std::string_view to_string(Objective o);
Objective objective_from_string(std::string_view s);

struct LossConfig {
  double beta = 0.5;
  double alpha = 1.0;
  Objective objective = Objective::Scpo;

  bool operator==(const LossConfig&) const = default;
};

/// Loss value and its gradient with respect to one problem's logits.
template <typename Scalar>
struct RowLoss {
  Scalar value{};
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad;
  Eigen::Index row = 0;
};

namespace detail {

template <typename Scalar>
Scalar softplus(Scalar x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
void check_finite(const RowLoss<Scalar>& l) {
  if (!std::isfinite(static_cast<double>(l.value)) || !l.grad.allFinite()) {
    throw NonFiniteLoss("loss or gradient is not finite");
  }
}

}  // namespace detail

/// Weighted DPO term plus length-normalised weighted NLL of the chosen
/// answer, for one problem row:
///
///   -w log sigmoid(beta * delta) - (alpha w / |y+|) log p(y+)
///   delta = [log p(y+) - log p_ref(y+)] - [log p(y-) - log p_ref(y-)]
///
/// The log-partition cancels inside delta, so d delta / d logits = e+ - e-.
template <typename D1, typename D2>
RowLoss<typename D1::Scalar> scpo_row_loss(const Eigen::MatrixBase<D1>& logits,
                                           const Eigen::MatrixBase<D2>& ref_logits,
                                           Eigen::Index chosen, Eigen::Index rejected,
                                           typename D1::Scalar weight,
                                           typename D1::Scalar chosen_length,
                                           typename D1::Scalar beta,
                                           typename D1::Scalar alpha) {
  using Scalar = typename D1::Scalar;
  const auto lp = log_softmax(logits);
  const auto ref = log_softmax(ref_logits);
  const Scalar delta = (lp(chosen) - ref(chosen)) - (lp(rejected) - ref(rejected));

  RowLoss<Scalar> out;
  out.value = weight * detail::softplus(-beta * delta) -
              (alpha * weight / chosen_length) * lp(chosen);

  const auto p = lp.array().exp().matrix();
  out.grad = ((alpha * weight / chosen_length) * p).eval();
  const Scalar dpo = weight * beta * detail::sigmoid(-beta * delta);
  out.grad(chosen) -= dpo + alpha * weight / chosen_length;
  out.grad(rejected) += dpo;
  detail::check_finite(out);
  return out;
}

/// Length-normalised NLL of a supervised target: -(1/|y+|) log p(y+).
template <typename D1>
RowLoss<typename D1::Scalar> lmsi_row_loss(const Eigen::MatrixBase<D1>& logits,
                                           Eigen::Index target,
                                           typename D1::Scalar target_length) {
  using Scalar = typename D1::Scalar;
  const auto lp = log_softmax(logits);
  RowLoss<Scalar> out;
  out.value = -lp(target) / target_length;
  out.grad = (lp.array().exp() / target_length).matrix();
  out.grad(target) -= Scalar(1) / target_length;
  detail::check_finite(out);
  return out;
}

/// |y+| for the tabular policy: character count of the canonical answer.
inline double answer_length(std::string_view answer) {
  return static_cast<double>(std::max<std::size_t>(answer.size(), 1));
}

template <typename Scalar>
RowLoss<Scalar> scpo_loss(const BasicPolicyModel<Scalar>& model,
                          const BasicPolicyModel<Scalar>& reference,
                          const PreferencePair& pair, const LossConfig& cfg) {
  const auto row = model.row_of(pair.problem_id);
  const auto ref_row = reference.row_of(pair.problem_id);
  const auto c = model.answer_index(row, pair.chosen_answer);
  const auto r = model.answer_index(row, pair.rejected_answer);
  if (reference.answer_index(ref_row, pair.chosen_answer) != c ||
      reference.answer_index(ref_row, pair.rejected_answer) != r) {
    throw UnknownAnswer("model and reference disagree on the answer domain of '" +
                        pair.problem_id + "'");
  }
  const Scalar w = cfg.objective == Objective::Unweighted ? Scalar(1) : Scalar(pair.weight);
  auto out = scpo_row_loss(model.logits(row), reference.logits(ref_row), c, r, w,
                           Scalar(answer_length(pair.chosen_answer)), Scalar(cfg.beta),
                           Scalar(cfg.alpha));
  out.row = row;
  return out;
}

template <typename Scalar>
RowLoss<Scalar> lmsi_loss(const BasicPolicyModel<Scalar>& model, std::string_view problem_id,
                          std::string_view target_answer) {
  const auto row = model.row_of(problem_id);
  const auto t = model.answer_index(row, target_answer);
  auto out = lmsi_row_loss(model.logits(row), t, Scalar(answer_length(target_answer)));
  out.row = row;
  return out;
}

/// Dispatches on cfg.objective.
template <typename Scalar>
RowLoss<Scalar> pair_loss(const BasicPolicyModel<Scalar>& model,
                          const BasicPolicyModel<Scalar>& reference,
                          const PreferencePair& pair, const LossConfig& cfg) {
  if (cfg.objective == Objective::Lmsi) {
    return lmsi_loss(model, pair.problem_id, pair.chosen_answer);
  }
  return scpo_loss(model, reference, pair, cfg);
}

}  // namespace scpo
