#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace oracle {

using grabnel::Edge;
using grabnel::Graph;
using grabnel::NodeId;

Adjacency adjacency(const Graph& g) {
  Adjacency a(g.num_nodes(), std::vector<bool>(g.num_nodes(), false));
  for (const Edge& e : g.edges()) a[e.u][e.v] = a[e.v][e.u] = true;
  return a;
}

Graph random_graph(std::size_t n, double p, int label_count, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::uniform_int_distribution<int> label(0, label_count - 1);
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (coin(rng)) edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
    }
  }
  grabnel::DiscreteLabels labels(n);
  for (auto& l : labels) l = label(rng);
  return Graph(n, std::move(edges), std::move(labels));
}

Graph random_continuous_graph(std::size_t n, double p, std::size_t dim, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Edge> edges;
  std::vector<double> weights;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      if (coin(rng)) {
        edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
        weights.push_back(0.1 + unit(rng));
      }
    }
  }
  grabnel::ContinuousFeatures f{dim, std::vector<double>(n * dim)};
  for (auto& x : f.values) x = unit(rng) * 4.0 - 2.0;
  return Graph::weighted(n, std::move(edges), std::move(weights), std::move(f));
}

Graph permute(const Graph& g, const std::vector<NodeId>& perm) {
  std::vector<Edge> edges;
  std::vector<double> weights;
  const auto src = g.edges();
  for (std::size_t i = 0; i < src.size(); ++i) {
    edges.push_back(grabnel::make_edge(perm[src[i].u], perm[src[i].v]));
    weights.push_back(g.is_weighted() ? g.weights()[i] : 1.0);
  }
  grabnel::NodeData data;
  if (g.has_discrete_labels()) {
    grabnel::DiscreteLabels labels(g.num_nodes());
    for (std::size_t v = 0; v < g.num_nodes(); ++v) labels[perm[v]] = g.labels()[v];
    data = labels;
  } else {
    const auto& f = g.features();
    grabnel::ContinuousFeatures out{f.dim, std::vector<double>(f.values.size())};
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      const auto row = f.row(v);
      std::copy(row.begin(), row.end(), out.values.begin() + static_cast<std::ptrdiff_t>(perm[v] * f.dim));
    }
    data = out;
  }
  if (g.is_weighted()) return Graph::weighted(g.num_nodes(), std::move(edges), std::move(weights), std::move(data));
  return Graph(g.num_nodes(), std::move(edges), std::move(data));
}

std::size_t dfs_components(const Graph& g) {
  const auto a = adjacency(g);
  std::vector<bool> seen(g.num_nodes(), false);
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    seen[v] = true;
    for (std::size_t w = 0; w < a.size(); ++w) {
      if (a[v][w] && !seen[w]) visit(w);
    }
  };
  std::size_t count = 0;
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    if (!seen[v]) {
      ++count;
      visit(v);
    }
  }
  return count;
}

std::vector<std::vector<int>> all_pairs_distances(const Graph& g) {
  const std::size_t n = g.num_nodes();
  constexpr int inf = 1 << 20;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (std::size_t v = 0; v < n; ++v) d[v][v] = 0;
  for (const Edge& e : g.edges()) d[e.u][e.v] = d[e.v][e.u] = 1;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    }
  }
  for (auto& row : d) {
    for (int& x : row) {
      if (x >= inf) x = -1;
    }
  }
  return d;
}

namespace {

// Adjacency after the structural part of p (injection ignored).
Adjacency applied(const Graph& g, const grabnel::Perturbation& p) {
  auto a = adjacency(g);
  if (const auto* f = std::get_if<grabnel::Flip>(&p)) {
    a[f->u][f->v] = a[f->v][f->u] = !a[f->u][f->v];
  } else if (const auto* r = std::get_if<grabnel::Rewire>(&p)) {
    a[r->u][r->v] = a[r->v][r->u] = false;
    a[r->u][r->s] = a[r->s][r->u] = true;
  } else if (const auto* s = std::get_if<grabnel::Swap>(&p)) {
    const bool uv = a[s->u][s->v];
    const bool us = a[s->u][s->s];
    a[s->u][s->v] = a[s->v][s->u] = us;
    a[s->u][s->s] = a[s->s][s->u] = uv;
  }
  return a;
}

std::size_t components_of(const Adjacency& a) {
  std::vector<bool> seen(a.size(), false);
  std::size_t count = 0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (seen[s]) continue;
    ++count;
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (std::size_t w = 0; w < a.size(); ++w) {
        if (a[v][w] && !seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
      }
    }
  }
  return count;
}

}  // namespace

bool two_hop_admissible(const Graph& g, const grabnel::Perturbation& p) {
  if (std::holds_alternative<grabnel::Inject>(p)) return true;
  const auto before = adjacency(g);
  const auto after = applied(g, p);
  const auto d = all_pairs_distances(g);
  for (std::size_t u = 0; u < before.size(); ++u) {
    for (std::size_t v = u + 1; v < before.size(); ++v) {
      if (after[u][v] && !before[u][v] && (d[u][v] < 0 || d[u][v] > 2)) return false;
    }
  }
  return true;
}

bool two_hop_rewire_admissible(const Graph& g, const grabnel::Perturbation& p) {
  const auto* r = std::get_if<grabnel::Rewire>(&p);
  if (!r) return false;
  const auto d = all_pairs_distances(g);
  return d[r->u][r->s] >= 1 && d[r->u][r->s] <= 2;
}

bool preserves_components(const Graph& g, const grabnel::Perturbation& p) {
  if (const auto* inj = std::get_if<grabnel::Inject>(&p)) {
    // The new node joins every component it touches, or is isolated.
    auto a = adjacency(g);
    for (auto& row : a) row.push_back(false);
    a.emplace_back(a.size(), false);
    const std::size_t x = a.size() - 1;
    for (NodeId c : inj->connections) a[x][c] = a[c][x] = true;
    return components_of(a) == components_of(adjacency(g));
  }
  return components_of(applied(g, p)) == components_of(adjacency(g));
}

std::vector<std::vector<std::map<std::string, int>>> wl_strings(const std::vector<Graph>& graphs, int iterations) {
  std::vector<std::vector<std::map<std::string, int>>> out(graphs.size());
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = graphs[gi];
    const auto a = adjacency(g);
    std::vector<std::string> label(g.num_nodes());
    for (std::size_t v = 0; v < g.num_nodes(); ++v) label[v] = std::to_string(g.labels()[v]);
    for (int h = 0; h <= iterations; ++h) {
      std::map<std::string, int> counts;
      for (const auto& l : label) ++counts[l];
      out[gi].push_back(counts);
      std::vector<std::string> next(label.size());
      for (std::size_t v = 0; v < label.size(); ++v) {
        std::vector<std::string> nb;
        for (std::size_t w = 0; w < label.size(); ++w) {
          if (a[v][w]) nb.push_back(label[w]);
        }
        std::sort(nb.begin(), nb.end());
        std::string s = "(" + label[v] + "|";
        for (const auto& x : nb) s += x + ",";
        next[v] = s + ")";
      }
      label = std::move(next);
    }
  }
  return out;
}

std::vector<double> gauss_solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    if (a[c][c] == 0.0) throw std::runtime_error("singular matrix");
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

Matrix gauss_inverse(Matrix a) {
  const std::size_t n = a.size();
  Matrix inv(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    const auto col = gauss_solve(a, e);
    for (std::size_t i = 0; i < n; ++i) inv[i][j] = col[i];
  }
  return inv;
}

double log_abs_det(Matrix a) {
  const std::size_t n = a.size();
  double result = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    result += std::log(std::abs(a[c][c]));
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return result;
}

std::vector<double> blr_posterior_mean(const Matrix& x, const std::vector<double>& y, const std::vector<double>& lambda,
                                       double noise) {
  const std::size_t n = x.size();
  const std::size_t d = lambda.size();
  Matrix precision(d, std::vector<double>(d, 0.0));
  std::vector<double> rhs(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += x[r][i] * x[r][j];
      precision[i][j] = s / noise;
    }
    precision[i][i] += lambda[i];
    for (std::size_t r = 0; r < n; ++r) rhs[i] += x[r][i] * y[r] / noise;
  }
  return gauss_solve(precision, rhs);
}

double blr_log_evidence(const Matrix& x, const std::vector<double>& y, const std::vector<double>& lambda, double noise,
                        double shape, double rate) {
  const std::size_t n = x.size();
  Matrix c(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < lambda.size(); ++k) s += x[i][k] * x[j][k] / lambda[k];
      c[i][j] = s + (i == j ? noise : 0.0);
    }
  }
  const auto alpha = gauss_solve(c, y);
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) quad += y[i] * alpha[i];
  double value = -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + log_abs_det(c) + quad);
  for (double l : lambda) value += shape * std::log(rate) - std::lgamma(shape) + shape * std::log(l) - rate * l;
  return value;
}

namespace {

// Inverse standard normal CDF: rational approximation refined by one Halley step.
double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01, -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p > 1.0 - 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

}  // namespace

double monte_carlo_ei(double mean, double sd, double best, std::size_t samples, std::uint64_t seed) {
  // Stratified sampling: one uniform draw inside each of `samples` equal-probability strata.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double total = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    double u = (static_cast<double>(i) + unit(rng)) / static_cast<double>(samples);
    u = std::clamp(u, 1e-300, 1.0 - 1e-16);
    total += std::max(0.0, mean + sd * normal_quantile(u) - best);
  }
  return total / static_cast<double>(samples);
}

}  // namespace oracle
