#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grabnel/campaign.hpp"
#include "grabnel/constraints.hpp"
#include "grabnel/dataset.hpp"
#include "grabnel/errors.hpp"
#include "grabnel/gcn.hpp"
#include "grabnel/json_io.hpp"
#include "grabnel/pattern_stats.hpp"
#include "grabnel/trace_io.hpp"
#include "grabnel/tudataset.hpp"
#include "grabnel/wire.hpp"

namespace fs = std::filesystem;
using namespace grabnel;

namespace {

// A directory is read as a TUDataset, anything else as a dataset JSON file.
LabeledDataset load_any_dataset(const std::string& path, std::uint64_t split_seed) {
  if (fs::is_directory(path)) {
    LabeledDataset ds = parse_tudataset(path);
    ds.split = make_split(ds.size(), 0.7, 0.15, split_seed);
    return ds;
  }
  return load_dataset(path);
}

struct VictimSpec {
  std::string weights;
  std::string command;
  std::string tcp;
  bool logits = false;
  int timeout_ms = 30000;

  SessionFactory factory() const {
    const int given = !weights.empty() + !command.empty() + !tcp.empty();
    if (given != 1) throw InvalidConfig("exactly one of --weights, --victim-cmd, --victim-tcp is required");
    ExternalVictimOptions opts;
    opts.logits = logits;
    opts.timeout_ms = timeout_ms;
    if (!weights.empty()) {
      auto w = std::make_shared<const GCNWeights>(load_gcn_weights(weights));
      return [w] { return std::make_unique<GCNSession>(w); };
    }
    if (!command.empty()) {
      return [cmd = command, opts]() -> std::unique_ptr<VictimSession> { return ExternalSession::spawn(cmd, opts); };
    }
    const auto colon = tcp.rfind(':');
    if (colon == std::string::npos) throw InvalidConfig("--victim-tcp expects host:port");
    const std::string host = tcp.substr(0, colon);
    const auto port = static_cast<std::uint16_t>(std::stoi(tcp.substr(colon + 1)));
    return [host, port, opts]() -> std::unique_ptr<VictimSession> { return ExternalSession::connect(host, port, opts); };
  }
};

void add_victim_options(CLI::App* cmd, VictimSpec& v) {
  cmd->add_option("--weights", v.weights, "GCN weights file (in-process victim)");
  cmd->add_option("--victim-cmd", v.command, "Command speaking the wire protocol on stdio");
  cmd->add_option("--victim-tcp", v.tcp, "host:port of a wire-protocol server");
  cmd->add_flag("--logits", v.logits, "External victim replies with logits");
  cmd->add_option("--timeout-ms", v.timeout_ms, "Per-query timeout for external victims");
}

// Turns the JSON object in `path` into "--key=value" arguments.
std::vector<std::string> config_arguments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(path + ": " + e.what());
  }
  if (!j.is_object()) throw DecodeError(path + ": expected an object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    if (key == "config") continue;
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_string()) {
      args.push_back(flag + "=" + value.get<std::string>());
    } else if (value.is_number()) {
      args.push_back(flag + "=" + value.dump());
    } else {
      throw DecodeError(path + ": value of '" + key + "' must be a scalar");
    }
  }
  return args;
}

// Splices config-file arguments in front of the command-line ones so flags win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::optional<std::string> config;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
  }
  if (!config || args.size() < 2) return args;
  auto extra = config_arguments(*config);
  args.insert(args.begin() + 2, extra.begin(), extra.end());
  return args;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Black-box adversarial attacks on graph classifiers"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config_path;
  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON file of flag values; command-line flags override it");
  };

  // gen-data
  ERGenConfig er;
  std::size_t er_size = 1500;
  std::string er_out;
  auto* gen = app.add_subcommand("gen-data", "Generate the component-count dataset");
  gen->add_option("--size", er_size, "Number of graphs")->capture_default_str();
  gen->add_option("--min-nodes", er.min_nodes)->capture_default_str();
  gen->add_option("--max-nodes", er.max_nodes)->capture_default_str();
  gen->add_option("--edge-probability", er.edge_probability)->capture_default_str();
  gen->add_option("--train-fraction", er.train_fraction)->capture_default_str();
  gen->add_option("--validation-fraction", er.validation_fraction)->capture_default_str();
  gen->add_option("--seed", er.seed)->capture_default_str();
  gen->add_option("--out", er_out, "Dataset JSON path")->required();
  add_config(gen);

  // train-victim
  GCNTrainConfig tc;
  std::string train_data, train_out, pooling = "max";
  std::uint64_t split_seed = 0;
  bool verbose = false;
  auto* train = app.add_subcommand("train-victim", "Train the built-in GCN victim");
  train->add_option("--data", train_data, "Dataset JSON or TUDataset directory")->required();
  train->add_option("--out", train_out, "Weights JSON path")->required();
  train->add_option("--hidden", tc.hidden)->capture_default_str();
  train->add_option("--epochs", tc.epochs)->capture_default_str();
  train->add_option("--batch-size", tc.batch_size)->capture_default_str();
  train->add_option("--lr", tc.learning_rate)->capture_default_str();
  train->add_option("--seed", tc.seed)->capture_default_str();
  train->add_option("--pooling", pooling, "max or sum")->capture_default_str();
  train->add_option("--degree-features", tc.degree_features, "Width of the one-hot degree input (0 = off)")
      ->capture_default_str();
  train->add_option("--split-seed", split_seed, "Split seed for TUDataset input")->capture_default_str();
  train->add_flag("--verbose", verbose, "Print per-epoch statistics");
  add_config(train);

  // serve-victim
  std::string serve_weights;
  std::optional<int> serve_port;
  int max_connections = 0;
  bool serve_logits = false;
  auto* serve = app.add_subcommand("serve-victim", "Serve a GCN over the wire protocol (stdio unless --port)");
  serve->add_option("--weights", serve_weights)->required();
  serve->add_option("--port", serve_port, "TCP port on 127.0.0.1 (0 picks one)");
  serve->add_option("--max-connections", max_connections, "Exit after this many connections (0 = never)");
  serve->add_flag("--logits", serve_logits, "Reply with logits instead of probabilities");
  add_config(serve);

  // attack
  AttackConfig ac;
  CampaignConfig cc;
  VictimSpec victim;
  std::string attack_data, attacker = "grabnel", mode = "flip", constraint = "none", out_dir;
  std::optional<int> target;
  std::optional<std::size_t> max_graphs, max_edits, max_queries;
  std::size_t trials = 3;
  std::uint64_t attack_split_seed = 0;
  auto* attack = app.add_subcommand("attack", "Run an attack campaign");
  attack->add_option("--data", attack_data, "Dataset JSON or TUDataset directory")->required();
  add_victim_options(attack, victim);
  attack->add_option("--attacker", attacker)
      ->check(CLI::IsMember({"grabnel", "random", "sequential-random", "genetic", "grabnel-no-sequential"}))
      ->capture_default_str();
  attack->add_option("--mode", mode)->check(CLI::IsMember({"flip", "rewire", "swap", "inject"}))->capture_default_str();
  attack->add_option("--constraint", constraint)
      ->check(CLI::IsMember({"none", "2hop", "2hop-rewire", "preserve-components"}))
      ->capture_default_str();
  attack->add_option("--budget-ratio", ac.budget_ratio)->capture_default_str();
  attack->add_option("--query-multiplier", ac.query_multiplier)->capture_default_str();
  attack->add_option("--query-cap", ac.query_cap)->capture_default_str();
  attack->add_option("--max-edits", max_edits, "Override the edit budget");
  attack->add_option("--max-queries", max_queries, "Override the query budget");
  attack->add_option("--n-init", ac.n_init, "Random queries opening every stage")->capture_default_str();
  attack->add_option("--wl-iterations", ac.wl_iterations)->capture_default_str();
  attack->add_option("--target-class", target, "Targeted attack toward this class");
  attack->add_option("--seed", ac.seed)->capture_default_str();
  attack->add_option("--trials", trials, "Repeat with seeds seed, seed+1, ...")->capture_default_str();
  attack->add_option("--workers", cc.workers)->capture_default_str();
  attack->add_option("--max-graphs", max_graphs, "Attack at most this many eligible graphs");
  attack->add_option("--split-seed", attack_split_seed, "Split seed for TUDataset input")->capture_default_str();
  attack->add_option("--out", out_dir, "Output directory")->required();
  add_config(attack);

  // stats
  std::string trace_dir, export_dir;
  auto* stats = app.add_subcommand("stats", "Adversarial-pattern report over a trace directory");
  stats->add_option("--traces", trace_dir)->required();
  stats->add_option("--export", export_dir, "Also write annotated adversarial graphs here");
  add_config(stats);

  // protocol-fixtures
  std::string fixture_dir;
  auto* fixtures = app.add_subcommand("protocol-fixtures", "Write the wire-protocol conformance fixtures");
  fixtures->add_option("--out", fixture_dir)->required();

  try {
    auto args = expand_config(argc, argv);
    std::vector<char*> raw;
    for (auto& a : args) raw.push_back(a.data());
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*gen) {
      const LabeledDataset ds = generate_er_dataset(er, er_size);
      save_dataset(ds, er_out);
      std::cout << "wrote " << ds.size() << " graphs to " << er_out << "\n";
    } else if (*train) {
      tc.pooling = parse_gcn_pooling(pooling);
      const LabeledDataset ds = load_any_dataset(train_data, split_seed);
      auto on_epoch = [&](int epoch, const EpochStats& s) {
        if (verbose) {
          std::printf("epoch %3d  loss %.4f  train %.4f  val %.4f\n", epoch, s.train_loss, s.train_accuracy,
                      s.validation_accuracy);
        }
      };
      const GCNTrainResult r = train_gcn(ds, tc, on_epoch);
      save_gcn_weights(r.weights, train_out);
      std::printf("best epoch %d  validation accuracy %.4f  test accuracy %.4f\n", r.best_epoch,
                  r.best_validation_accuracy, gcn_accuracy(ds, ds.split.test, r.weights));
    } else if (*serve) {
      const GCNWeights w = load_gcn_weights(serve_weights);
      Scorer scorer = [&w, serve_logits](const Graph& g) {
        if (serve_logits) {
          const Eigen::VectorXd z = gcn_logits(g, w);
          return std::vector<double>(z.data(), z.data() + z.size());
        }
        return gcn_forward(g, w).class_scores;
      };
      if (serve_port) {
        serve_tcp(scorer, static_cast<std::uint16_t>(*serve_port),
                  [](std::uint16_t p) { std::cerr << "listening on 127.0.0.1:" << p << std::endl; }, max_connections);
      } else {
        serve_stdio(scorer);
      }
    } else if (*attack) {
      ac.mode = parse_attack_mode(mode);
      ac.constraints.mode = parse_constraint_mode(constraint);
      ac.target = target;
      ac.max_edits = max_edits;
      ac.max_queries = max_queries;
      ac.validate();
      cc.attacker = parse_attacker(attacker);
      cc.max_graphs = max_graphs;
      if (trials == 0) throw InvalidConfig("--trials must be positive");
      const LabeledDataset ds = load_any_dataset(attack_data, attack_split_seed);
      const SessionFactory factory = victim.factory();
      std::vector<CampaignSummary> summaries;
      for (std::size_t t = 0; t < trials; ++t) {
        cc.attack = ac;
        cc.attack.seed = ac.seed + t;
        cc.out_dir = trials == 1 ? fs::path(out_dir) : fs::path(out_dir) / ("trial_" + std::to_string(t));
        summaries.push_back(run_campaign(ds, factory, cc));
        const auto& s = summaries.back();
        std::printf("trial %zu  seed %llu  clean %.4f  attacked %zu  asr %.4f  post-attack %.4f  errors %zu\n", t,
                    static_cast<unsigned long long>(cc.attack.seed), s.clean_accuracy, s.attacked, s.asr,
                    s.post_attack_accuracy, s.errors);
      }
      const TrialAggregate agg = aggregate_trials(summaries);
      fs::create_directories(out_dir);
      write_text(fs::path(out_dir) / "aggregate.json", aggregate_to_json(agg));
      std::printf("asr %.4f +- %.4f  post-attack accuracy %.4f +- %.4f\n", agg.asr.mean, agg.asr.sd,
                  agg.post_attack_accuracy.mean, agg.post_attack_accuracy.sd);
    } else if (*stats) {
      const auto docs = load_trace_dir(trace_dir);
      const PatternReport r = adversarial_pattern_stats(docs);
      std::cout << pattern_report_to_json(r);
      if (!export_dir.empty()) {
        for (const auto& d : docs) {
          if (d.result.success) export_adversarial_graph(d, export_dir);
        }
      }
    } else if (*fixtures) {
      fs::create_directories(fixture_dir);
      write_protocol_fixtures(fixture_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
