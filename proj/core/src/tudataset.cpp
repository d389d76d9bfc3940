#include "grabnel/tudataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>

#include "grabnel/errors.hpp"

namespace grabnel {

namespace fs = std::filesystem;

namespace {

struct LineReader {
  std::ifstream in;
  std::string file;
  std::size_t line_no = 0;

  explicit LineReader(const fs::path& path) : in(path), file(path.filename().string()) {
    if (!in) throw ParseError(path.string() + ": cannot open");
  }

  /// Next non-empty line, or nullopt at EOF.
  std::optional<std::string> next() {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return line;
    }
    return std::nullopt;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(file + ":" + std::to_string(line_no) + ": " + what);
  }
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::int64_t to_int(std::string_view field, const LineReader& r) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    r.fail("expected integer, got '" + std::string(field) + "'");
  }
  return v;
}

double to_double(std::string_view field, const LineReader& r) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    r.fail("expected real number, got '" + std::string(field) + "'");
  }
  return v;
}

std::vector<std::int64_t> read_int_column(const fs::path& path) {
  LineReader r(path);
  std::vector<std::int64_t> out;
  while (auto line = r.next()) {
    auto fields = split_commas(*line);
    // Node label files may carry several columns; the first one is the label.
    out.push_back(to_int(fields.front(), r));
  }
  return out;
}

/// Maps arbitrary integer values to 0..k-1 in ascending order of value.
template <class Out>
std::vector<Out> densify(const std::vector<std::int64_t>& raw) {
  std::vector<std::int64_t> uniq(raw);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<Out> out;
  out.reserve(raw.size());
  for (auto v : raw) {
    out.push_back(static_cast<Out>(std::lower_bound(uniq.begin(), uniq.end(), v) - uniq.begin()));
  }
  return out;
}

std::string find_prefix(const fs::path& dir) {
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto fname = entry.path().filename().string();
    if (fname.size() > 6 && fname.ends_with("_A.txt")) return fname.substr(0, fname.size() - 6);
  }
  throw ParseError(dir.string() + ": no *_A.txt file found");
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

}  // namespace

LabeledDataset parse_tudataset(const fs::path& dir, const TUParseOptions& options) {
  const std::string name = options.name.empty() ? find_prefix(dir) : options.name;
  auto file = [&](const std::string& suffix) { return dir / (name + "_" + suffix + ".txt"); };

  const auto raw_graph_labels = read_int_column(file("graph_labels"));
  const std::size_t num_graphs = raw_graph_labels.size();

  // Node -> graph (both 1-indexed in the file).
  std::vector<std::size_t> node_graph;
  {
    LineReader r(file("graph_indicator"));
    while (auto line = r.next()) {
      const auto gid = to_int(trim(*line), r);
      if (gid < 1 || static_cast<std::size_t>(gid) > num_graphs) {
        throw InconsistentIndex(r.file + ":" + std::to_string(r.line_no) + ": graph id " +
                                std::to_string(gid) + " has no entry in graph_labels");
      }
      node_graph.push_back(static_cast<std::size_t>(gid - 1));
    }
  }
  const std::size_t total_nodes = node_graph.size();

  std::vector<std::size_t> graph_size(num_graphs, 0);
  std::vector<std::size_t> local_id(total_nodes);
  for (std::size_t v = 0; v < total_nodes; ++v) local_id[v] = graph_size[node_graph[v]]++;

  std::vector<std::vector<Edge>> edges(num_graphs);
  std::vector<std::vector<double>> weights(num_graphs);
  std::vector<std::pair<std::size_t, Edge>> edge_rows;  // per A line: graph, edge
  {
    LineReader r(file("A"));
    while (auto line = r.next()) {
      auto fields = split_commas(*line);
      if (fields.size() != 2) r.fail("expected 'i, j'");
      const auto a = to_int(fields[0], r);
      const auto b = to_int(fields[1], r);
      for (auto x : {a, b}) {
        if (x < 1 || static_cast<std::size_t>(x) > total_nodes) {
          throw InconsistentIndex(r.file + ":" + std::to_string(r.line_no) + ": node id " +
                                  std::to_string(x) + " outside 1.." + std::to_string(total_nodes));
        }
      }
      const auto ga = node_graph[a - 1];
      if (ga != node_graph[b - 1]) {
        throw InconsistentIndex(r.file + ":" + std::to_string(r.line_no) +
                                ": edge joins nodes of different graphs");
      }
      if (a == b) r.fail("self-loop");
      edge_rows.push_back({ga, make_edge(static_cast<NodeId>(local_id[a - 1]),
                                         static_cast<NodeId>(local_id[b - 1]))});
    }
  }

  std::vector<double> edge_weight(edge_rows.size(), 1.0);
  const bool weighted = options.use_edge_weights && fs::exists(file("edge_attributes"));
  if (weighted) {
    LineReader r(file("edge_attributes"));
    std::size_t i = 0;
    while (auto line = r.next()) {
      if (i >= edge_rows.size()) r.fail("more edge attribute lines than edges");
      edge_weight[i++] = to_double(split_commas(*line).front(), r);
    }
    if (i != edge_rows.size()) r.fail("fewer edge attribute lines than edges");
  }
  for (std::size_t i = 0; i < edge_rows.size(); ++i) {
    edges[edge_rows[i].first].push_back(edge_rows[i].second);
    weights[edge_rows[i].first].push_back(edge_weight[i]);
  }

  std::vector<std::int64_t> node_labels;
  if (fs::exists(file("node_labels"))) {
    auto raw = read_int_column(file("node_labels"));
    if (raw.size() != total_nodes) {
      throw InconsistentIndex(name + "_node_labels.txt: " + std::to_string(raw.size()) +
                              " labels for " + std::to_string(total_nodes) + " nodes");
    }
    node_labels = densify<std::int64_t>(raw);
  } else {
    node_labels.assign(total_nodes, 0);
  }

  std::vector<std::vector<double>> node_attributes;
  if (fs::exists(file("node_attributes"))) {
    LineReader r(file("node_attributes"));
    while (auto line = r.next()) {
      std::vector<double> row;
      for (auto f : split_commas(*line)) row.push_back(to_double(f, r));
      if (!node_attributes.empty() && row.size() != node_attributes.front().size()) {
        r.fail("ragged node attribute row");
      }
      node_attributes.push_back(std::move(row));
    }
    if (node_attributes.size() != total_nodes) {
      throw InconsistentIndex(name + "_node_attributes.txt: row count does not match node count");
    }
  }

  LabeledDataset ds;
  ds.labels = densify<int>(raw_graph_labels);
  ds.num_classes = ds.labels.empty() ? 0 : *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;

  std::vector<NodeData> data(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) {
    if (node_attributes.empty()) {
      data[g] = DiscreteLabels{};
    } else {
      data[g] = ContinuousFeatures{node_attributes.front().size(), {}};
    }
  }
  for (std::size_t v = 0; v < total_nodes; ++v) {
    auto& d = data[node_graph[v]];
    if (auto* labels = std::get_if<DiscreteLabels>(&d)) {
      labels->push_back(node_labels[v]);
    } else {
      auto& f = std::get<ContinuousFeatures>(d).values;
      f.insert(f.end(), node_attributes[v].begin(), node_attributes[v].end());
    }
  }
  ds.graphs.reserve(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) {
    if (weighted) {
      ds.graphs.push_back(Graph::weighted(graph_size[g], std::move(edges[g]), std::move(weights[g]),
                                          std::move(data[g])));
    } else {
      ds.graphs.push_back(Graph(graph_size[g], std::move(edges[g]), std::move(data[g])));
    }
  }
  return ds;
}

void write_tudataset(const LabeledDataset& ds, const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  auto open = [&](const std::string& suffix) {
    std::ofstream out(dir / (name + "_" + suffix + ".txt"), std::ios::trunc);
    if (!out) throw Error("cannot write " + (dir / (name + "_" + suffix + ".txt")).string());
    return out;
  };
  auto a = open("A");
  auto indicator = open("graph_indicator");
  auto graph_labels = open("graph_labels");

  const bool continuous = !ds.graphs.empty() && !ds.graphs.front().has_discrete_labels();
  const bool weighted = std::any_of(ds.graphs.begin(), ds.graphs.end(),
                                    [](const Graph& g) { return g.is_weighted(); });
  std::ofstream node_labels, node_attributes, edge_attributes;
  if (continuous) {
    node_attributes = open("node_attributes");
  } else {
    node_labels = open("node_labels");
  }
  if (weighted) edge_attributes = open("edge_attributes");

  std::size_t offset = 1;
  for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi) {
    const Graph& g = ds.graphs[gi];
    graph_labels << ds.labels[gi] << '\n';
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      indicator << (gi + 1) << '\n';
      if (continuous) {
        auto row = g.features().row(v);
        for (std::size_t k = 0; k < row.size(); ++k) {
          node_attributes << (k ? ", " : "") << format_double(row[k]);
        }
        node_attributes << '\n';
      } else {
        node_labels << g.labels()[v] << '\n';
      }
    }
    for (std::size_t i = 0; i < g.num_edges(); ++i) {
      const Edge e = g.edges()[i];
      a << (offset + e.u) << ", " << (offset + e.v) << '\n';
      a << (offset + e.v) << ", " << (offset + e.u) << '\n';
      if (weighted) {
        const auto w = format_double(g.weights()[i]);
        edge_attributes << w << '\n' << w << '\n';
      }
    }
    offset += g.num_nodes();
  }
}

}  // namespace grabnel
