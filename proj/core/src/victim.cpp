#include "grabnel/victim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "grabnel/errors.hpp"

namespace grabnel {

std::size_t VictimResponse::argmax() const {
  return static_cast<std::size_t>(std::max_element(class_scores.begin(), class_scores.end()) -
                                  class_scores.begin());
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw SimplexViolation("empty logit vector");
  for (double z : logits) {
    if (!std::isfinite(z)) throw SimplexViolation("non-finite logit");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

VictimResponse validate_scores(std::vector<double> scores, double tolerance) {
  if (scores.empty()) throw SimplexViolation("empty score vector");
  for (double p : scores) {
    if (!std::isfinite(p) || p < 0.0) {
      throw SimplexViolation("score " + std::to_string(p) + " is not a probability");
    }
  }
  const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
  if (std::abs(total - 1.0) > tolerance) {
    throw SimplexViolation("scores sum to " + std::to_string(total));
  }
  for (double& p : scores) p /= total;
  return VictimResponse{std::move(scores)};
}

VictimResponse VictimSession::query(const Graph& g) {
  ++queries_;
  return do_query(g);
}

VictimResponse CallbackSession::do_query(const Graph& g) { return validate_scores(fn_(g)); }

}  // namespace grabnel
