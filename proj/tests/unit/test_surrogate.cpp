#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "grabnel/errors.hpp"
#include "grabnel/surrogate.hpp"
#include "oracles.hpp"

using namespace grabnel;

namespace {

struct Instance {
  FeatureMatrix phi;
  std::vector<double> y;
};

// WL-like count features: small non-negative integers, some columns constant.
Instance random_instance(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d) {
  Instance inst{FeatureMatrix(n, d), std::vector<double>(static_cast<std::size_t>(n))};
  std::uniform_int_distribution<int> count(0, 4);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Eigen::Index j = 0; j < d; ++j) {
    const bool constant = rng() % 7 == 0;
    for (Eigen::Index i = 0; i < n; ++i) inst.phi(i, j) = constant ? 2.0 : count(rng);
  }
  for (auto& v : inst.y) v = noise(rng);
  return inst;
}

// Inputs scaled by their range and centred, targets standardised.
std::pair<oracle::Matrix, std::vector<double>> normalised(const Instance& inst) {
  const Eigen::Index n = inst.phi.rows();
  const Eigen::Index d = inst.phi.cols();
  oracle::Matrix x(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(d)));
  for (Eigen::Index j = 0; j < d; ++j) {
    const double lo = inst.phi.col(j).minCoeff();
    const double hi = inst.phi.col(j).maxCoeff();
    const double mean = inst.phi.col(j).mean();
    for (Eigen::Index i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = hi > lo ? (inst.phi(i, j) - mean) / (hi - lo) : 0.0;
    }
  }
  double mean = 0.0;
  for (double v : inst.y) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : inst.y) var += (v - mean) * (v - mean);
  const double sd = std::max(std::sqrt(var / static_cast<double>(n)), 1e-8);
  std::vector<double> y;
  for (double v : inst.y) y.push_back((v - mean) / sd);
  return {x, y};
}

double max_abs_diff(const Eigen::VectorXd& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) m = std::max(m, std::abs(a[static_cast<Eigen::Index>(i)] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("frozen posterior matches the dense closed form") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> log_u(-2.0, 2.0);
  for (int t = 0; t < 100; ++t) {
    const auto n = static_cast<Eigen::Index>(2 + rng() % 19);
    const auto d = static_cast<Eigen::Index>(1 + rng() % 30);
    const Instance inst = random_instance(rng, n, d);
    Eigen::VectorXd lambda(d);
    for (Eigen::Index j = 0; j < d; ++j) lambda[j] = std::pow(10.0, log_u(rng));
    const double noise = std::pow(10.0, log_u(rng) / 2.0 - 1.0);

    const SurrogatePosterior post = fit_surrogate_fixed(inst.phi, inst.y, lambda, noise);
    const auto [x, y] = normalised(inst);
    const std::vector<double> lam(lambda.data(), lambda.data() + d);
    const auto ref = oracle::blr_posterior_mean(x, y, lam, noise);
    INFO("n=" << n << " d=" << d << " noise=" << noise << " maxw=" << post.weight_mean.cwiseAbs().maxCoeff());
    CHECK(max_abs_diff(post.weight_mean, ref) < 1e-8);

    const double expected = oracle::blr_log_evidence(x, y, lam, noise, 1e-6, 1e-6);
    CHECK(std::abs(log_evidence(post, inst.phi, inst.y) - expected) < 1e-8 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("posterior covariance is the inverse posterior precision") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto n = static_cast<Eigen::Index>(3 + rng() % 10);
    const auto d = static_cast<Eigen::Index>(1 + rng() % 8);
    const Instance inst = random_instance(rng, n, d);
    const Eigen::VectorXd lambda = Eigen::VectorXd::Constant(d, 0.7);
    const double noise = 0.3;
    const SurrogatePosterior post = fit_surrogate_fixed(inst.phi, inst.y, lambda, noise);
    const auto [x, y] = normalised(inst);
    oracle::Matrix a(static_cast<std::size_t>(d), std::vector<double>(static_cast<std::size_t>(d), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < a.size(); ++j) {
        for (const auto& row : x) a[i][j] += row[i] * row[j] / noise;
      }
      a[i][i] += 0.7;
    }
    const auto inv = oracle::gauss_inverse(a);
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < a.size(); ++j) {
        CHECK(std::abs(post.weight_covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - inv[i][j]) <
              1e-8);
      }
    }
  }
}

TEST_CASE("evidence never decreases across accepted updates") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const Instance inst =
        random_instance(rng, static_cast<Eigen::Index>(2 + rng() % 19), static_cast<Eigen::Index>(1 + rng() % 30));
    const SurrogatePosterior post = fit_surrogate(inst.phi, inst.y);
    REQUIRE_FALSE(post.evidence_trace.empty());
    for (std::size_t i = 1; i < post.evidence_trace.size(); ++i) {
      CHECK(post.evidence_trace[i] >= post.evidence_trace[i - 1]);
    }
    CHECK(post.evidence_trace.back() ==
          doctest::Approx(log_evidence(post, inst.phi, inst.y)).epsilon(1e-9));
  }
}

TEST_CASE("relevance determination keeps the informative features") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> eps(0.0, 0.01);
  const Eigen::Index n = 60;
  const Eigen::Index d = 50;
  FeatureMatrix phi(n, d);
  std::uniform_int_distribution<int> count(0, 5);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) phi(i, j) = count(rng);
  }
  std::vector<double> y;
  for (Eigen::Index i = 0; i < n; ++i) y.push_back(3.0 * phi(i, 0) - 2.0 * phi(i, 1) + eps(rng));
  const SurrogatePosterior post = fit_surrogate(phi, y);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) order[static_cast<std::size_t>(j)] = j;
  std::sort(order.begin(), order.end(),
            [&](auto a, auto b) { return std::abs(post.weight_mean[a]) > std::abs(post.weight_mean[b]); });
  CHECK(std::min(order[0], order[1]) == 0);
  CHECK(std::max(order[0], order[1]) == 1);
  CHECK(post.weight_mean[0] > 0.0);
  CHECK(post.weight_mean[1] < 0.0);
  for (Eigen::Index j = 2; j < d; ++j) CHECK(post.precisions[j] > 100.0 * std::max(post.precisions[0], post.precisions[1]));

}

TEST_CASE("recovers a single-feature linear target") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> eps(0.0, 0.01);
  std::uniform_int_distribution<int> count(0, 6);
  FeatureMatrix phi(50, 5);
  std::vector<double> y;
  for (Eigen::Index i = 0; i < 50; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) phi(i, j) = count(rng);
    y.push_back(3.0 * phi(i, 1) + eps(rng));
  }
  const SurrogatePosterior post = fit_surrogate(phi, y);
  // Back to raw units: dy/dphi_j = target_std * w_j / range_j.
  for (Eigen::Index j = 0; j < 5; ++j) {
    const double w = post.target_std * post.weight_mean[j] / post.input_range[j];
    if (j == 1) {
      CHECK(w == doctest::Approx(3.0).epsilon(0.05));
    } else {
      CHECK(std::abs(w) < 0.1);
    }
  }
}

TEST_CASE("constant targets and degenerate inputs") {
  FeatureMatrix phi(4, 3);
  phi << 1, 0, 5, 2, 0, 5, 3, 1, 5, 4, 1, 5;
  const std::vector<double> y(4, 2.5);
  const SurrogatePosterior post = fit_surrogate(phi, y);
  CHECK(post.degenerate[2]);
  for (const auto& p : predict_rows(post, phi)) {
    CHECK(std::isfinite(p.variance));
    CHECK(p.mean == doctest::Approx(2.5));
  }
}

TEST_CASE("row order does not matter") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const Instance inst = random_instance(rng, 12, 9);
    std::vector<Eigen::Index> perm(12);
    for (Eigen::Index i = 0; i < 12; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Instance shuffled{FeatureMatrix(12, 9), {}};
    for (std::size_t i = 0; i < perm.size(); ++i) {
      shuffled.phi.row(static_cast<Eigen::Index>(i)) = inst.phi.row(perm[i]);
      shuffled.y.push_back(inst.y[static_cast<std::size_t>(perm[i])]);
    }
    const auto a = fit_surrogate(inst.phi, inst.y);
    const auto b = fit_surrogate(shuffled.phi, shuffled.y);
    CHECK((a.weight_mean - b.weight_mean).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(a.noise_variance == doctest::Approx(b.noise_variance).epsilon(1e-6));
  }
}

TEST_CASE("predictive variance never drops below the noise") {
  std::mt19937_64 rng(6);
  const Instance inst = random_instance(rng, 15, 20);
  const SurrogatePosterior post = fit_surrogate(inst.phi, inst.y);
  const double floor = post.noise_variance * post.target_std * post.target_std;
  for (const auto& p : predict_rows(post, inst.phi)) CHECK(p.variance >= floor * (1.0 - 1e-12));
  // Batch and single-row prediction agree.
  const auto batch = predict_rows(post, inst.phi);
  for (Eigen::Index i = 0; i < inst.phi.rows(); ++i) {
    const auto single = predict(post, Eigen::VectorXd(inst.phi.row(i).transpose()));
    CHECK(single.mean == doctest::Approx(batch[static_cast<std::size_t>(i)].mean).epsilon(1e-12));
    CHECK(single.variance == doctest::Approx(batch[static_cast<std::size_t>(i)].variance).epsilon(1e-12));
  }
}

TEST_CASE("predictive mean matches sampled weights") {
  std::mt19937_64 rng(7);
  const Instance inst = random_instance(rng, 10, 4);
  const SurrogatePosterior post = fit_surrogate_fixed(inst.phi, inst.y, Eigen::VectorXd::Ones(4), 0.2);
  const Eigen::LLT<Eigen::MatrixXd> chol(post.weight_covariance);
  const Eigen::MatrixXd l = chol.matrixL();
  std::normal_distribution<double> z(0.0, 1.0);
  const Eigen::VectorXd x = post.normalise(inst.phi.row(0).transpose());
  double sum = 0.0;
  const int samples = 200000;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd e(4);
    for (auto& v : e) v = z(rng);
    sum += x.dot(post.weight_mean + l * e);
  }
  const double sampled = post.target_mean + post.target_std * sum / samples;
  CHECK(sampled == doctest::Approx(predict(post, inst.phi.row(0).transpose()).mean).epsilon(0.01).scale(1.0));
}

TEST_CASE("shape errors") {
  const FeatureMatrix phi = FeatureMatrix::Ones(3, 2);
  const std::vector<double> y{1.0, 2.0};
  CHECK_THROWS_AS(fit_surrogate(phi, y), DimensionMismatch);
  const std::vector<double> ok{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(fit_surrogate_fixed(phi, ok, Eigen::VectorXd::Ones(3), 0.1), DimensionMismatch);
  const auto post = fit_surrogate(phi, ok);
  CHECK_THROWS_AS(predict(post, Eigen::VectorXd::Ones(5)), DimensionMismatch);
}
