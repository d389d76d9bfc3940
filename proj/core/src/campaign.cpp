#include "grabnel/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <mutex>
#include <thread>

#include "grabnel/errors.hpp"
#include "grabnel/trace_io.hpp"
#include "json_internal.hpp"

namespace grabnel {

namespace {

std::string fmt(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double divisor(AsrNormalisation m, std::size_t n) {
  const auto d = static_cast<double>(std::max<std::size_t>(n, 1));
  switch (m) {
    case AsrNormalisation::Raw: return 1.0;
    case AsrNormalisation::PerNodeSquared: return d * d;
    case AsrNormalisation::PerNode: return d;
  }
  return 1.0;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string to_string(AsrNormalisation m) {
  switch (m) {
    case AsrNormalisation::Raw: return "raw";
    case AsrNormalisation::PerNodeSquared: return "per_n2";
    case AsrNormalisation::PerNode: return "per_n";
  }
  return "raw";
}

ASRCurve asr_curve(std::span<const AsrSample> samples, AsrNormalisation normalisation, std::size_t points) {
  if (points < 2) throw InvalidConfig("an ASR curve needs at least two grid points");
  ASRCurve curve;
  curve.normalisation = normalisation;
  double lo = HUGE_VAL;
  double hi = 0.0;
  for (const auto& s : samples) {
    const double d = divisor(normalisation, s.num_nodes);
    lo = std::min(lo, 1.0 / d);
    hi = std::max(hi, static_cast<double>(std::max<std::size_t>(s.budget_queries, 1)) / d);
  }
  if (samples.empty()) lo = hi = 1.0;
  lo = std::min(lo, hi);
  curve.grid.resize(points);
  const double ratio = std::log(hi / lo);
  for (std::size_t k = 0; k < points; ++k) {
    curve.grid[k] = lo * std::exp(ratio * static_cast<double>(k) / static_cast<double>(points - 1));
  }
  curve.grid.front() = lo;
  curve.grid.back() = hi;

  std::vector<double> hits;
  for (const auto& s : samples) {
    if (s.success) hits.push_back(static_cast<double>(s.queries) / divisor(normalisation, s.num_nodes));
  }
  std::sort(hits.begin(), hits.end());
  curve.asr.resize(points);
  for (std::size_t k = 0; k < points; ++k) {
    const auto reached = static_cast<std::size_t>(std::upper_bound(hits.begin(), hits.end(), curve.grid[k]) - hits.begin());
    curve.asr[k] = samples.empty() ? 0.0 : static_cast<double>(reached) / static_cast<double>(samples.size());
  }
  // Successes never exceed their own budget, so every hit is <= hi.
  curve.asr.back() = samples.empty() ? 0.0 : static_cast<double>(hits.size()) / static_cast<double>(samples.size());
  return curve;
}

double asr_area(const ASRCurve& curve) {
  if (curve.grid.empty()) return 0.0;
  const double span = std::log10(curve.grid.back()) - std::log10(curve.grid.front());
  if (!(span > 0.0)) return curve.asr.back();
  double area = 0.0;
  for (std::size_t k = 1; k < curve.grid.size(); ++k) {
    const double w = std::log10(curve.grid[k]) - std::log10(curve.grid[k - 1]);
    area += 0.5 * w * (curve.asr[k] + curve.asr[k - 1]);
  }
  return area / span;
}

std::uint64_t graph_seed(std::uint64_t campaign_seed, std::size_t index) {
  return splitmix(splitmix(campaign_seed) ^ static_cast<std::uint64_t>(index));
}

CampaignSummary run_campaign(const LabeledDataset& ds, const SessionFactory& victim, const CampaignConfig& cfg) {
  const std::vector<std::size_t> indices = cfg.indices.empty() ? ds.split.test : cfg.indices;
  CampaignSummary summary;
  summary.attacker = to_string(cfg.attacker);
  summary.outcomes.resize(indices.size());

  // Clean predictions, in index order, on a session that is not charged to any attack.
  {
    auto session = victim();
    std::size_t eligible = 0;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      auto& o = summary.outcomes[k];
      o.graph_index = indices[k];
      if (o.graph_index >= ds.size()) throw InvalidConfig("graph index " + std::to_string(o.graph_index) + " out of range");
      const Graph& g = ds.graphs[o.graph_index];
      o.label = ds.labels[o.graph_index];
      o.num_nodes = g.num_nodes();
      try {
        o.predicted = static_cast<int>(session->query(g).argmax());
      } catch (const ProtocolError&) {
        throw;
      } catch (const std::exception& e) {
        o.error = e.what();
        continue;
      }
      o.eligible = o.predicted == o.label;
      if (o.eligible && (!cfg.max_graphs || eligible < *cfg.max_graphs)) {
        o.attacked = true;
        ++eligible;
      }
    }
  }

  std::vector<std::optional<TraceDocument>> docs(indices.size());
  std::atomic<std::size_t> next{0};
  std::mutex fatal_mutex;
  std::exception_ptr fatal;
  auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= indices.size()) return;
      auto& o = summary.outcomes[k];
      if (!o.attacked) continue;
      AttackConfig ac = cfg.attack;
      ac.seed = graph_seed(cfg.attack.seed, o.graph_index);
      const Graph& g = ds.graphs[o.graph_index];
      try {
        o.budget_queries = compute_budget(g, ac).queries;
        auto session = victim();
        AttackResult r = run_attacker(cfg.attacker, *session, g, o.label, ac);
        o.success = r.success;
        o.queries = r.queries;
        o.net_edits = r.net_edits;
        docs[k] = TraceDocument{o.graph_index, g, std::move(r)};
      } catch (const Timeout& e) {
        o.error = e.what();
      } catch (const RemoteError& e) {
        o.error = e.what();
      } catch (const ProtocolError&) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next = indices.size();
        return;
      } catch (const std::exception& e) {
        o.error = e.what();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, cfg.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  std::vector<AsrSample> samples;
  std::vector<double> net_edits;
  for (const auto& o : summary.outcomes) {
    if (!o.error.empty()) ++summary.errors;
    if (o.predicted >= 0) ++summary.evaluated;
    if (o.eligible) ++summary.correct;
    if (!o.attacked || !o.error.empty()) continue;
    ++summary.attacked;
    summary.total_queries += o.queries;
    samples.push_back({o.success, o.queries, o.budget_queries, o.num_nodes});
    if (o.success) {
      ++summary.successes;
      net_edits.push_back(static_cast<double>(o.net_edits));
    }
  }
  if (summary.evaluated > 0) {
    summary.clean_accuracy = static_cast<double>(summary.correct) / static_cast<double>(summary.evaluated);
  }
  if (summary.attacked > 0) summary.asr = static_cast<double>(summary.successes) / static_cast<double>(summary.attacked);
  summary.post_attack_accuracy = summary.clean_accuracy * (1.0 - summary.asr);
  if (!net_edits.empty()) {
    double total = 0.0;
    for (double x : net_edits) total += x;
    summary.mean_net_edits = total / static_cast<double>(net_edits.size());
    std::sort(net_edits.begin(), net_edits.end());
    const std::size_t m = net_edits.size();
    summary.median_net_edits = m % 2 ? net_edits[m / 2] : 0.5 * (net_edits[m / 2 - 1] + net_edits[m / 2]);
  }
  for (auto mode : {AsrNormalisation::Raw, AsrNormalisation::PerNodeSquared, AsrNormalisation::PerNode}) {
    summary.curves.push_back(asr_curve(samples, mode, cfg.asr_points));
  }

  if (!cfg.out_dir.empty()) {
    const auto traces = cfg.out_dir / "traces";
    std::filesystem::create_directories(traces);
    for (const auto& d : docs) {
      if (d) save_trace(*d, traces / ("graph_" + std::to_string(d->graph_index) + ".json"));
    }
    detail::write_file((cfg.out_dir / "results.csv").string(), outcomes_to_csv(summary));
    detail::write_file((cfg.out_dir / "asr.csv").string(), curves_to_csv(summary.curves));
    detail::write_file((cfg.out_dir / "summary.json").string(), summary_to_json(summary));
  }
  return summary;
}

TrialAggregate aggregate_trials(std::span<const CampaignSummary> summaries) {
  if (summaries.empty()) throw EmptyInput("no trials to aggregate");
  auto stats = [&](auto field) {
    MetricStats m;
    const auto k = static_cast<double>(summaries.size());
    for (const auto& s : summaries) m.mean += field(s);
    m.mean /= k;
    if (summaries.size() > 1) {
      double ss = 0.0;
      for (const auto& s : summaries) ss += (field(s) - m.mean) * (field(s) - m.mean);
      m.sd = std::sqrt(ss / (k - 1.0));
    }
    return m;
  };
  TrialAggregate a;
  a.trials = summaries.size();
  a.clean_accuracy = stats([](const CampaignSummary& s) { return s.clean_accuracy; });
  a.asr = stats([](const CampaignSummary& s) { return s.asr; });
  a.post_attack_accuracy = stats([](const CampaignSummary& s) { return s.post_attack_accuracy; });
  a.mean_net_edits = stats([](const CampaignSummary& s) { return s.mean_net_edits; });
  std::size_t curves = summaries.front().curves.size();
  for (const auto& s : summaries) curves = std::min(curves, s.curves.size());
  for (std::size_t c = 0; c < curves; ++c) {
    a.asr_area.push_back(stats([c](const CampaignSummary& s) { return asr_area(s.curves[c]); }));
  }
  return a;
}

std::string aggregate_to_json(const TrialAggregate& a) {
  auto value = [](const MetricStats& m) { return detail::ordered_json{{"mean", m.mean}, {"sd", m.sd}}; };
  detail::ordered_json j;
  j["trials"] = a.trials;
  j["clean_accuracy"] = value(a.clean_accuracy);
  j["asr"] = value(a.asr);
  j["post_attack_accuracy"] = value(a.post_attack_accuracy);
  j["mean_net_edits"] = value(a.mean_net_edits);
  detail::ordered_json areas = detail::ordered_json::array();
  for (const auto& m : a.asr_area) areas.push_back(value(m));
  j["asr_area"] = std::move(areas);
  return j.dump(2) + "\n";
}

std::string summary_to_json(const CampaignSummary& s) {
  detail::ordered_json j;
  j["attacker"] = s.attacker;
  j["evaluated"] = s.evaluated;
  j["correct"] = s.correct;
  j["attacked"] = s.attacked;
  j["successes"] = s.successes;
  j["errors"] = s.errors;
  j["clean_accuracy"] = s.clean_accuracy;
  j["asr"] = s.asr;
  j["post_attack_accuracy"] = s.post_attack_accuracy;
  j["mean_net_edits"] = s.mean_net_edits;
  j["median_net_edits"] = s.median_net_edits;
  j["total_queries"] = s.total_queries;
  detail::ordered_json areas;
  for (const auto& c : s.curves) areas[to_string(c.normalisation)] = asr_area(c);
  j["asr_area"] = std::move(areas);
  return j.dump(2) + "\n";
}

std::string outcomes_to_csv(const CampaignSummary& s) {
  std::string out = "graph_index,label,predicted,num_nodes,eligible,attacked,success,queries,budget_queries,net_edits,error\n";
  for (const auto& o : s.outcomes) {
    std::string err = o.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    out += std::to_string(o.graph_index) + "," + std::to_string(o.label) + "," + std::to_string(o.predicted) + "," +
           std::to_string(o.num_nodes) + "," + (o.eligible ? "1" : "0") + "," + (o.attacked ? "1" : "0") + "," +
           (o.success ? "1" : "0") + "," + std::to_string(o.queries) + "," + std::to_string(o.budget_queries) + "," +
           std::to_string(o.net_edits) + ",\"" + err + "\"\n";
  }
  return out;
}

std::string curves_to_csv(const std::vector<ASRCurve>& curves) {
  std::string out = "normalisation,point,queries,asr\n";
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < c.grid.size(); ++k) {
      out += to_string(c.normalisation) + "," + std::to_string(k) + "," + fmt(c.grid[k]) + "," + fmt(c.asr[k]) + "\n";
    }
  }
  return out;
}

}  // namespace grabnel
