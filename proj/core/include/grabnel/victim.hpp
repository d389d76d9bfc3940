#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "grabnel/graph.hpp"

namespace grabnel {

/// Class scores on the probability simplex.
struct VictimResponse {
  std::vector<double> class_scores;

  std::size_t num_classes() const { return class_scores.size(); }
  std::size_t argmax() const;
};

/// Numerically stable softmax. Throws SimplexViolation on non-finite logits.
std::vector<double> softmax(std::span<const double> logits);

/// Checks scores against the simplex. Replies whose sum is within `tolerance`
/// of 1 (and that have no negative or non-finite entry) are renormalised;
/// anything else throws SimplexViolation.
VictimResponse validate_scores(std::vector<double> scores, double tolerance = 1e-3);

/// One attack's connection to a victim. query() counts every request it sends,
/// including those whose reply later fails.
class VictimSession {
 public:
  virtual ~VictimSession() = default;

  VictimResponse query(const Graph& g);
  std::size_t queries() const { return queries_; }

 protected:
  virtual VictimResponse do_query(const Graph& g) = 0;

 private:
  std::size_t queries_ = 0;
};

/// Victim given by an arbitrary scoring function; replies are validated.
class CallbackSession : public VictimSession {
 public:
  using Fn = std::function<std::vector<double>(const Graph&)>;
  explicit CallbackSession(Fn fn) : fn_(std::move(fn)) {}

 protected:
  VictimResponse do_query(const Graph& g) override;

 private:
  Fn fn_;
};

}  // namespace grabnel
