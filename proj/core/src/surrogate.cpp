#include "grabnel/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "grabnel/errors.hpp"

namespace grabnel {

namespace {

constexpr double kMinPrecision = 1e-10;
constexpr double kMaxPrecision = 1e10;
constexpr double kMinNoise = 1e-12;
constexpr double kMaxNoise = 1e6;
constexpr double kStdFloor = 1e-8;
constexpr double kMaxJitter = 1e-6;
constexpr int kBacktrackSteps = 12;

struct Problem {
  Eigen::MatrixXd x;    // normalised inputs, N x D
  Eigen::VectorXd y;    // standardised targets
  Eigen::MatrixXd gram; // x^T x
  Eigen::VectorXd xty;  // x^T y
};

struct State {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double residual_sq = 0.0;
  double evidence = 0.0;
};

void check_shapes(const FeatureMatrix& phi, std::span<const double> losses) {
  if (static_cast<std::size_t>(phi.rows()) != losses.size()) {
    throw DimensionMismatch("feature rows (" + std::to_string(phi.rows()) +
                            ") != number of losses (" + std::to_string(losses.size()) + ")");
  }
  if (losses.size() < 2) throw DimensionMismatch("surrogate needs at least two observations");
  for (double l : losses) {
    if (!std::isfinite(l)) throw DimensionMismatch("losses must be finite");
  }
}

void fit_normalisers(SurrogatePosterior& post, const FeatureMatrix& phi,
                     std::span<const double> losses) {
  const auto d = phi.cols();
  const Eigen::VectorXd min = phi.colwise().minCoeff().transpose();
  const Eigen::VectorXd max = phi.colwise().maxCoeff().transpose();
  post.input_range = max - min;
  post.degenerate.assign(static_cast<std::size_t>(d), false);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(post.input_range[j] > 1e-12 * std::max(1.0, std::abs(max[j])))) {
      post.degenerate[static_cast<std::size_t>(j)] = true;
      post.input_range[j] = 1.0;
    }
  }
  // Centring the scaled columns stands in for an intercept with a flat prior.
  post.input_offset = phi.colwise().mean().transpose();
  const Eigen::Map<const Eigen::VectorXd> y(losses.data(), static_cast<Eigen::Index>(losses.size()));
  post.target_mean = y.mean();
  const double var = (y.array() - post.target_mean).square().mean();
  post.target_std = std::max(std::sqrt(var), kStdFloor);
}

Problem make_problem(const SurrogatePosterior& post, const FeatureMatrix& phi,
                     std::span<const double> losses) {
  Problem p;
  p.x = post.normalise_rows(phi);
  const Eigen::Map<const Eigen::VectorXd> y(losses.data(), static_cast<Eigen::Index>(losses.size()));
  p.y = (y.array() - post.target_mean) / post.target_std;
  p.gram = p.x.transpose() * p.x;
  p.xty = p.x.transpose() * p.y;
  return p;
}

double log_prior(const Eigen::VectorXd& lambda, const SurrogateConfig& cfg) {
  const double k = cfg.gamma_shape;
  const double r = cfg.gamma_rate;
  const double constant = k * std::log(r) - std::lgamma(k);
  return lambda.size() * constant + (k * lambda.array().log() - r * lambda.array()).sum();
}

/// Factorises `m`, retrying with `jitter*I` added and grown up to kMaxJitter.
Eigen::LLT<Eigen::MatrixXd> factorise(const Eigen::MatrixXd& m, double jitter) {
  const auto n = m.rows();
  Eigen::LLT<Eigen::MatrixXd> plain(m);
  if (plain.info() == Eigen::Success) return plain;
  for (double j = jitter; j <= kMaxJitter * 1.0000001; j *= 10.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(m + j * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) return llt;
  }
  throw SingularFit("posterior precision is numerically singular");
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

State solve(const Problem& p, const Eigen::VectorXd& lambda, double noise,
            const SurrogateConfig& cfg) {
  const auto n = p.x.rows();
  const auto d = p.x.cols();
  State s;
  double log_det_c = 0.0;
  double quad = 0.0;
  if (d <= n) {
    // Weight space: A = X^T X / noise + diag(lambda).
    Eigen::MatrixXd a = p.gram / noise;
    a.diagonal() += lambda;
    const auto llt = factorise(a, cfg.jitter);
    s.cov = llt.solve(Eigen::MatrixXd::Identity(d, d));
    s.mean = s.cov * p.xty / noise;
    const Eigen::VectorXd resid = p.y - p.x * s.mean;
    s.residual_sq = resid.squaredNorm();
    quad = s.residual_sq / noise + s.mean.dot(lambda.cwiseProduct(s.mean));
    log_det_c = static_cast<double>(n) * std::log(noise) - lambda.array().log().sum() + log_det(llt);
  } else {
    // Function space: C = noise I + X diag(1/lambda) X^T.
    const Eigen::VectorXd inv_lambda = lambda.cwiseInverse();
    const Eigen::MatrixXd x_scaled = p.x * inv_lambda.asDiagonal();
    Eigen::MatrixXd c = x_scaled * p.x.transpose();
    c.diagonal().array() += noise;
    const auto llt = factorise(c, cfg.jitter);
    const Eigen::VectorXd alpha = llt.solve(p.y);
    s.mean = x_scaled.transpose() * alpha;
    s.cov = Eigen::MatrixXd(inv_lambda.asDiagonal());
    s.cov.noalias() -= x_scaled.transpose() * llt.solve(x_scaled);
    s.residual_sq = (p.y - p.x * s.mean).squaredNorm();
    quad = p.y.dot(alpha);
    log_det_c = log_det(llt);
  }
  s.evidence = -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + log_det_c + quad) +
               log_prior(lambda, cfg);
  return s;
}

void store(SurrogatePosterior& post, State&& s, const Eigen::VectorXd& lambda, double noise) {
  post.weight_mean = std::move(s.mean);
  post.weight_covariance = std::move(s.cov);
  post.precisions = lambda;
  post.noise_variance = noise;
}

}  // namespace

Eigen::VectorXd SurrogatePosterior::normalise(const Eigen::Ref<const Eigen::VectorXd>& phi) const {
  if (phi.size() != input_offset.size()) {
    throw DimensionMismatch("feature vector has dimension " + std::to_string(phi.size()) +
                            ", surrogate expects " + std::to_string(input_offset.size()));
  }
  Eigen::VectorXd out = (phi - input_offset).cwiseQuotient(input_range);
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    if (degenerate[static_cast<std::size_t>(j)]) out[j] = 0.0;
  }
  return out;
}

Eigen::MatrixXd SurrogatePosterior::normalise_rows(const Eigen::Ref<const Eigen::MatrixXd>& phi) const {
  if (phi.cols() != input_offset.size()) {
    throw DimensionMismatch("feature matrix has " + std::to_string(phi.cols()) +
                            " columns, surrogate expects " + std::to_string(input_offset.size()));
  }
  Eigen::MatrixXd out = (phi.rowwise() - input_offset.transpose()).array().rowwise() /
                        input_range.transpose().array();
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    if (degenerate[static_cast<std::size_t>(j)]) out.col(j).setZero();
  }
  return out;
}

SurrogatePosterior fit_surrogate_fixed(const FeatureMatrix& phi, std::span<const double> losses,
                                       const Eigen::VectorXd& precisions, double noise_variance,
                                       const SurrogateConfig& cfg) {
  check_shapes(phi, losses);
  if (precisions.size() != phi.cols()) throw DimensionMismatch("precision vector length != D");
  SurrogatePosterior post;
  fit_normalisers(post, phi, losses);
  const auto problem = make_problem(post, phi, losses);
  auto state = solve(problem, precisions, noise_variance, cfg);
  post.evidence_trace.push_back(state.evidence);
  store(post, std::move(state), precisions, noise_variance);
  return post;
}

SurrogatePosterior prior_surrogate(const FeatureMatrix& phi, std::span<const double> losses,
                                   const SurrogateConfig& cfg) {
  check_shapes(phi, losses);
  SurrogatePosterior post;
  fit_normalisers(post, phi, losses);
  const auto d = phi.cols();
  post.precisions = Eigen::VectorXd::Constant(d, std::max(cfg.gamma_shape / cfg.gamma_rate, kMinPrecision));
  post.weight_mean = Eigen::VectorXd::Zero(d);
  post.weight_covariance = Eigen::MatrixXd(post.precisions.cwiseInverse().asDiagonal());
  post.noise_variance = 1.0;
  return post;
}

SurrogatePosterior fit_surrogate(const FeatureMatrix& phi, std::span<const double> losses,
                                 const SurrogateConfig& cfg) {
  check_shapes(phi, losses);
  SurrogatePosterior post;
  fit_normalisers(post, phi, losses);
  const auto problem = make_problem(post, phi, losses);
  const auto d = phi.cols();
  const double n = static_cast<double>(losses.size());

  const double pinned = std::clamp(cfg.gamma_shape / cfg.gamma_rate, kMinPrecision, kMaxPrecision);
  Eigen::VectorXd lambda = Eigen::VectorXd::Ones(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (post.degenerate[static_cast<std::size_t>(j)]) lambda[j] = pinned;
  }
  const double target_var = problem.y.squaredNorm() / n;
  double noise = std::clamp(0.1 * target_var, 1e-6, kMaxNoise);

  State state = solve(problem, lambda, noise, cfg);
  post.evidence_trace.push_back(state.evidence);

  for (int it = 0; it < cfg.max_evidence_iterations; ++it) {
    // MacKay fixed-point proposal with the Gamma prior on each precision.
    const Eigen::VectorXd gamma =
        (1.0 - lambda.array() * state.cov.diagonal().array()).max(0.0).matrix();
    Eigen::VectorXd lambda_fp = lambda;
    for (Eigen::Index j = 0; j < d; ++j) {
      if (post.degenerate[static_cast<std::size_t>(j)]) continue;
      lambda_fp[j] = std::clamp((gamma[j] + 2.0 * cfg.gamma_shape) /
                                    (state.mean[j] * state.mean[j] + 2.0 * cfg.gamma_rate),
                                kMinPrecision, kMaxPrecision);
    }
    const double dof = std::max(n - gamma.sum(), 1e-8);
    const double noise_fp = std::clamp(state.residual_sq / dof, kMinNoise, kMaxNoise);

    // Move in log space, halving the step until the evidence does not drop.
    const Eigen::ArrayXd log_lambda = lambda.array().log();
    const Eigen::ArrayXd step_lambda = lambda_fp.array().log() - log_lambda;
    const double log_noise = std::log(noise);
    const double step_noise = std::log(noise_fp) - log_noise;
    bool accepted = false;
    double accepted_scale = 0.0;
    double scale = 1.0;
    for (int b = 0; b < kBacktrackSteps && !accepted; ++b, scale *= 0.5) {
      const Eigen::VectorXd lambda_try = (log_lambda + scale * step_lambda).exp().matrix();
      const double noise_try = std::exp(log_noise + scale * step_noise);
      try {
        State trial = solve(problem, lambda_try, noise_try, cfg);
        if (trial.evidence > state.evidence) {
          lambda = lambda_try;
          noise = noise_try;
          state = std::move(trial);
          accepted = true;
          accepted_scale = scale;
        }
      } catch (const SingularFit&) {
      }
    }
    if (!accepted) break;
    post.evidence_trace.push_back(state.evidence);
    post.iterations = it + 1;
    const double moved =
        accepted_scale * std::max(std::abs(step_noise),
                                  step_lambda.size() ? step_lambda.abs().maxCoeff() : 0.0);
    if (moved < cfg.convergence_tolerance) break;
  }
  store(post, std::move(state), lambda, noise);
  return post;
}

Prediction predict(const SurrogatePosterior& post, const Eigen::Ref<const Eigen::VectorXd>& phi) {
  const Eigen::VectorXd x = post.normalise(phi);
  const double mean = x.dot(post.weight_mean);
  const double var = x.dot(post.weight_covariance * x) + post.noise_variance;
  const double s = post.target_std;
  return {post.target_mean + s * mean, s * s * std::max(var, post.noise_variance)};
}

std::vector<Prediction> predict_rows(const SurrogatePosterior& post, const FeatureMatrix& phi) {
  const Eigen::MatrixXd x = post.normalise_rows(phi);
  const Eigen::VectorXd mean = x * post.weight_mean;
  const Eigen::VectorXd quad = (x * post.weight_covariance).cwiseProduct(x).rowwise().sum();
  const double s = post.target_std;
  std::vector<Prediction> out(static_cast<std::size_t>(phi.rows()));
  for (Eigen::Index i = 0; i < phi.rows(); ++i) {
    const double var = std::max(quad[i], 0.0) + post.noise_variance;
    out[static_cast<std::size_t>(i)] = {post.target_mean + s * mean[i], s * s * var};
  }
  return out;
}

double log_evidence(const SurrogatePosterior& post, const FeatureMatrix& phi,
                    std::span<const double> losses, const SurrogateConfig& cfg) {
  check_shapes(phi, losses);
  if (phi.cols() != post.dimension()) throw DimensionMismatch("feature dimension != surrogate dimension");
  const auto problem = make_problem(post, phi, losses);
  return solve(problem, post.precisions, post.noise_variance, cfg).evidence;
}

}  // namespace grabnel
