#include <algorithm>

#include "attack_internal.hpp"
#include "grabnel/errors.hpp"

namespace grabnel {

namespace detail {

Recorder::Recorder(VictimSession& session, const Graph& original, int y, const AttackConfig& cfg,
                   std::string attacker)
    : session_(session), original_(original), y_(y), target_(cfg.target), start_(session.queries()) {
  result_.trace.attacker = std::move(attacker);
  result_.trace.true_label = y;
  result_.trace.target = cfg.target;
  result_.trace.budget = compute_budget(original, cfg);
}

double Recorder::query(const Graph& perturbed, std::size_t stage, const EditSet& edits, const EditSet& prefix) {
  if (remaining() == 0) throw InvalidConfig("query budget exhausted");
  const VictimResponse resp = session_.query(perturbed);
  const double loss = attack_loss(resp, y_, target_);
  result_.trace.records.push_back(QueryRecord{stage, edits, loss, used()});
  const double best = result_.loss_curve.empty() ? loss : std::max(loss, result_.loss_curve.back());
  result_.loss_curve.push_back(best);
  if (attack_succeeded(loss) && !result_.success) {
    result_.success = true;
    result_.adversarial = perturbed;
    result_.edits = prefix;
    result_.edits.insert(result_.edits.end(), edits.begin(), edits.end());
  }
  return loss;
}

AttackResult Recorder::finish(const EditSet& fallback) {
  if (!result_.success) result_.edits = fallback;
  result_.net_edits = edit_distance_from_base(result_.edits);
  result_.queries = used();
  return std::move(result_);
}

std::optional<EditSet> random_unqueried(const CandidateGenerator& gen, const Graph& base, std::size_t size,
                                        const std::set<EditSet>& queried, Rng& rng) {
  for (int attempt = 0; attempt < CandidateGenerator::kSampleAttempts; ++attempt) {
    auto e = gen.random_edit_set(base, size, rng);
    if (!e) return std::nullopt;
    EditSet c = canonical(std::move(*e));
    if (!queried.count(c)) return c;
  }
  if (size != 1 || gen.mode() == AttackMode::Inject) return std::nullopt;
  std::vector<EditSet> left;
  for (auto& p : gen.enumerate(base)) {
    EditSet c{std::move(p)};
    if (!queried.count(c)) left.push_back(std::move(c));
  }
  if (left.empty()) return std::nullopt;
  return left[std::uniform_int_distribution<std::size_t>(0, left.size() - 1)(rng)];
}

SurrogateModel::SurrogateModel(const AttackConfig& cfg, const Graph& original)
    : cfg_(cfg),
      encoder_(cfg.wl_iterations, !original.has_discrete_labels(),
               cfg.mode == AttackMode::Inject ? ContinuousLayout::Pool : ContinuousLayout::Flatten) {}

void SurrogateModel::observe(const Graph& g, double loss) {
  encoder_.observe(std::span<const Graph>(&g, 1));
  losses_.push_back(loss);
}

std::vector<EditSet> SurrogateModel::propose(const Graph& base, std::span<const ScoredEdits> history,
                                             const CandidateGenerator& gen, std::size_t edit_set_size,
                                             const std::set<EditSet>& queried, Rng& rng) {
  if (losses_.empty()) return {};
  const FeatureMatrix& phi = encoder_.observed();
  SurrogatePosterior post;
  try {
    post = fit_surrogate(phi, losses_, cfg_.surrogate);
  } catch (const SingularFit&) {
    post = prior_surrogate(phi, losses_, cfg_.surrogate);
  }
  const double best = *std::max_element(losses_.begin(), losses_.end());
  const AcquisitionFn fn = make_ei_acquisition(post, encoder_, base, best);
  auto res = optimise_acquisition(fn, base, history, gen, cfg_.acquisition, edit_set_size, queried, rng);
  std::vector<EditSet> out;
  for (auto& c : res.batch) out.push_back(std::move(c.edits));
  return out;
}

}  // namespace detail

namespace {

using detail::Recorder;

/// Staged search shared by grabnel and sequential-random; without a surrogate,
/// proposals after the opening random queries are random too.
AttackResult run_staged(VictimSession& session, const Graph& g, int y, const AttackConfig& cfg,
                        const std::string& name, bool use_surrogate) {
  Recorder rec(session, g, y, cfg, name);
  const auto stages = stage_budgets(rec.budget());
  const CandidateGenerator gen(cfg.mode, cfg.constraints, cfg.injection);
  Rng rng(cfg.seed);
  std::optional<detail::SurrogateModel> model;
  if (use_surrogate) model.emplace(cfg, g);

  Graph base = g;
  EditSet committed;
  for (std::size_t stage = 0; stage < stages.size(); ++stage) {
    const std::size_t quota = std::min(stages[stage], rec.remaining());
    std::vector<ScoredEdits> history;
    std::set<EditSet> queried;
    std::size_t spent = 0;

    auto ask = [&](const EditSet& e) {
      const Graph perturbed = apply_edits(base, e);
      const double loss = rec.query(perturbed, stage, e, committed);
      history.push_back({e, loss});
      queried.insert(e);
      ++spent;
      if (model) model->observe(perturbed, loss);
    };

    const std::size_t n_init = std::min(cfg.n_init, quota);
    bool exhausted = false;
    for (std::size_t i = 0; i < n_init && !rec.succeeded(); ++i) {
      auto e = detail::random_unqueried(gen, base, 1, queried, rng);
      if (!e) {
        exhausted = true;
        break;
      }
      ask(*e);
    }
    while (!exhausted && !rec.succeeded() && spent < quota) {
      std::vector<EditSet> batch;
      if (model) batch = model->propose(base, history, gen, 1, queried, rng);
      if (batch.empty()) {
        const std::size_t want = std::min(cfg.acquisition.batch_query_size, quota - spent);
        for (std::size_t i = 0; i < want; ++i) {
          auto e = detail::random_unqueried(gen, base, 1, queried, rng);
          if (!e) break;
          if (std::find(batch.begin(), batch.end(), *e) == batch.end()) batch.push_back(std::move(*e));
        }
        if (batch.empty()) exhausted = true;
      }
      for (const auto& e : batch) {
        if (rec.succeeded() || spent >= quota) break;
        if (!queried.count(e)) ask(e);
      }
    }
    if (rec.succeeded() || history.empty()) break;

    // Commit the stage's highest-loss edit; the earliest query wins ties.
    const auto best = std::max_element(history.begin(), history.end(),
                                       [](const ScoredEdits& a, const ScoredEdits& b) { return a.loss < b.loss; });
    base = apply_edits(base, best->edits);
    committed.insert(committed.end(), best->edits.begin(), best->edits.end());
    rec.commit(best->edits);
    if (rec.remaining() == 0) break;
  }
  return rec.finish(committed);
}

}  // namespace

AttackResult grabnel_attack(VictimSession& session, const Graph& g, int y, const AttackConfig& cfg) {
  return run_staged(session, g, y, cfg, to_string(Attacker::Grabnel), true);
}

AttackResult sequential_random_attack(VictimSession& session, const Graph& g, int y, const AttackConfig& cfg) {
  return run_staged(session, g, y, cfg, to_string(Attacker::SequentialRandom), false);
}

}  // namespace grabnel
