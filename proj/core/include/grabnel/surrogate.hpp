#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "grabnel/wl_features.hpp"

namespace grabnel {

struct SurrogateConfig {
  /// Gamma(shape, rate) prior on every ARD precision.
  double gamma_shape = 1e-6;
  double gamma_rate = 1e-6;
  int max_evidence_iterations = 300;
  /// Stop once no log-hyperparameter moves by more than this in an accepted step.
  double convergence_tolerance = 1e-4;
  double jitter = 1e-10;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Sparse Bayesian linear regression with an ARD prior, fitted on min-max
/// scaled, mean-centred inputs and standardised targets. Weights live in normalised space.
struct SurrogatePosterior {
  Eigen::VectorXd weight_mean;
  Eigen::MatrixXd weight_covariance;
  double noise_variance = 1.0;
  Eigen::VectorXd precisions;

  // Input normaliser: x' = (x - input_offset) / input_range, with input_range the
  // column max - min and input_offset the column mean; degenerate columns map to 0.
  Eigen::VectorXd input_offset;
  Eigen::VectorXd input_range;
  std::vector<bool> degenerate;

  // Target standardiser.
  double target_mean = 0.0;
  double target_std = 1.0;

  /// log_evidence after the initial state and every accepted update.
  std::vector<double> evidence_trace;
  int iterations = 0;

  Eigen::Index dimension() const { return weight_mean.size(); }

  Eigen::VectorXd normalise(const Eigen::Ref<const Eigen::VectorXd>& phi) const;
  Eigen::MatrixXd normalise_rows(const Eigen::Ref<const Eigen::MatrixXd>& phi) const;
};

/// Type-II maximum likelihood fit of precisions and noise variance.
/// Throws DimensionMismatch on shape errors and SingularFit if the posterior
/// precision cannot be factorised even with 1e-6 jitter.
SurrogatePosterior fit_surrogate(const FeatureMatrix& phi, std::span<const double> losses,
                                 const SurrogateConfig& cfg = {});

/// Posterior at fixed hyperparameters (no evidence maximisation).
SurrogatePosterior fit_surrogate_fixed(const FeatureMatrix& phi, std::span<const double> losses,
                                       const Eigen::VectorXd& precisions, double noise_variance,
                                       const SurrogateConfig& cfg = {});

/// Prior-only posterior (zero weight mean, covariance diag(1/precision) with
/// precision 1) for when fitting fails.
SurrogatePosterior prior_surrogate(const FeatureMatrix& phi, std::span<const double> losses,
                                   const SurrogateConfig& cfg = {});

/// Predictive mean and variance in original target units.
Prediction predict(const SurrogatePosterior& post, const Eigen::Ref<const Eigen::VectorXd>& phi);
/// One prediction per row of `phi`.
std::vector<Prediction> predict_rows(const SurrogatePosterior& post, const FeatureMatrix& phi);

/// Log marginal likelihood of the standardised targets plus the Gamma log-prior
/// of the precisions (taken over log-precision), at `post`'s hyperparameters.
double log_evidence(const SurrogatePosterior& post, const FeatureMatrix& phi,
                    std::span<const double> losses, const SurrogateConfig& cfg = {});

}  // namespace grabnel
