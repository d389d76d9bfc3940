#include "grabnel/json_io.hpp"

#include <fstream>
#include <sstream>

#include "grabnel/errors.hpp"
#include "json_internal.hpp"

namespace grabnel {

namespace detail {

namespace {

std::string at(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string at(const std::string& path, std::size_t idx) {
  return path + "/" + std::to_string(idx);
}

NodeId as_node(const ordered_json& v, const std::string& path) {
  const auto x = as_int(v, path);
  if (x < 0 || x > std::numeric_limits<NodeId>::max()) {
    throw DecodeError(path + ": node index out of range");
  }
  return static_cast<NodeId>(x);
}

std::vector<double> as_double_vector(const ordered_json& v, const std::string& path) {
  std::vector<double> out;
  const auto& arr = as_array(v, path);
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(as_double(arr[i], at(path, i)));
  return out;
}

std::vector<std::size_t> as_index_vector(const ordered_json& v, const std::string& path) {
  std::vector<std::size_t> out;
  const auto& arr = as_array(v, path);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto x = as_int(arr[i], at(path, i));
    if (x < 0) throw DecodeError(at(path, i) + ": negative index");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

}  // namespace

ordered_json parse_json(std::string_view text) {
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError(std::string("malformed JSON: ") + e.what());
  }
}

const ordered_json& member(const ordered_json& obj, const std::string& key,
                           const std::string& path) {
  if (!obj.is_object()) throw DecodeError((path.empty() ? "/" : path) + ": expected object");
  auto it = obj.find(key);
  if (it == obj.end()) throw DecodeError(at(path, key) + ": missing");
  return *it;
}

std::int64_t as_int(const ordered_json& v, const std::string& path) {
  if (!v.is_number_integer()) throw DecodeError(path + ": expected integer");
  return v.get<std::int64_t>();
}

double as_double(const ordered_json& v, const std::string& path) {
  if (!v.is_number()) throw DecodeError(path + ": expected number");
  return v.get<double>();
}

const ordered_json& as_array(const ordered_json& v, const std::string& path) {
  if (!v.is_array()) throw DecodeError(path + ": expected array");
  return v;
}

ordered_json graph_to_value(const Graph& g) {
  ordered_json doc;
  doc["num_nodes"] = g.num_nodes();
  ordered_json edges = ordered_json::array();
  for (const Edge& e : g.edges()) edges.push_back({e.u, e.v});
  doc["edges"] = std::move(edges);
  if (g.is_weighted()) {
    doc["edge_weights"] = std::vector<double>(g.weights().begin(), g.weights().end());
  }
  if (g.has_discrete_labels()) {
    doc["node_labels"] = g.labels();
  } else {
    const auto& f = g.features();
    ordered_json rows = ordered_json::array();
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      auto row = f.row(v);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    doc["node_features"] = std::move(rows);
  }
  return doc;
}

Graph value_to_graph(const ordered_json& doc, const std::string& path) {
  const auto n_raw = as_int(member(doc, "num_nodes", path), at(path, "num_nodes"));
  if (n_raw < 0) throw DecodeError(at(path, "num_nodes") + ": negative");
  const auto n = static_cast<std::size_t>(n_raw);

  const auto edges_path = at(path, "edges");
  const auto& edges_doc = as_array(member(doc, "edges", path), edges_path);
  std::vector<Edge> edges;
  edges.reserve(edges_doc.size());
  for (std::size_t i = 0; i < edges_doc.size(); ++i) {
    const auto pair_path = at(edges_path, i);
    const auto& pair = as_array(edges_doc[i], pair_path);
    if (pair.size() != 2) throw DecodeError(pair_path + ": expected [u, v]");
    const NodeId u = as_node(pair[0], at(pair_path, 0));
    const NodeId v = as_node(pair[1], at(pair_path, 1));
    if (static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
      throw DecodeError(pair_path + ": endpoint >= num_nodes");
    }
    if (u == v) throw DecodeError(pair_path + ": self-loop");
    edges.push_back({u, v});
  }

  const bool has_labels = doc.contains("node_labels");
  const bool has_features = doc.contains("node_features");
  if (has_labels == has_features) {
    throw DecodeError((path.empty() ? "/" : path) +
                      ": exactly one of node_labels / node_features is required");
  }
  NodeData data;
  if (has_labels) {
    const auto lp = at(path, "node_labels");
    const auto& arr = as_array(doc["node_labels"], lp);
    if (arr.size() != n) throw DecodeError(lp + ": length != num_nodes");
    DiscreteLabels labels;
    for (std::size_t i = 0; i < arr.size(); ++i) labels.push_back(as_int(arr[i], at(lp, i)));
    data = std::move(labels);
  } else {
    const auto fp = at(path, "node_features");
    const auto& arr = as_array(doc["node_features"], fp);
    if (arr.size() != n) throw DecodeError(fp + ": length != num_nodes");
    ContinuousFeatures features;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      auto row = as_double_vector(arr[i], at(fp, i));
      if (i == 0) features.dim = row.size();
      if (row.size() != features.dim) throw DecodeError(at(fp, i) + ": ragged feature row");
      features.values.insert(features.values.end(), row.begin(), row.end());
    }
    data = std::move(features);
  }

  try {
    if (doc.contains("edge_weights")) {
      auto weights = as_double_vector(doc["edge_weights"], at(path, "edge_weights"));
      if (weights.size() != edges.size()) {
        throw DecodeError(at(path, "edge_weights") + ": length != edges length");
      }
      return Graph::weighted(n, std::move(edges), std::move(weights), std::move(data));
    }
    return Graph(n, std::move(edges), std::move(data));
  } catch (const InvalidGraph& e) {
    throw DecodeError((path.empty() ? "/" : path) + ": " + e.what());
  }
}

ordered_json perturbation_to_value(const Perturbation& p) {
  ordered_json doc;
  if (const auto* f = std::get_if<Flip>(&p)) {
    doc = {{"type", "flip"}, {"u", f->u}, {"v", f->v}};
  } else if (const auto* r = std::get_if<Rewire>(&p)) {
    doc = {{"type", "rewire"}, {"u", r->u}, {"v", r->v}, {"s", r->s}};
  } else if (const auto* s = std::get_if<Swap>(&p)) {
    doc = {{"type", "swap"}, {"u", s->u}, {"v", s->v}, {"s", s->s}};
  } else {
    const auto& inj = std::get<Inject>(p);
    doc["type"] = "inject";
    if (const auto* label = std::get_if<std::int64_t>(&inj.attribute)) {
      doc["label"] = *label;
    } else {
      doc["features"] = std::get<std::vector<double>>(inj.attribute);
    }
    doc["connections"] = inj.connections;
  }
  return doc;
}

Perturbation value_to_perturbation(const ordered_json& doc, const std::string& path) {
  const auto& type_doc = member(doc, "type", path);
  if (!type_doc.is_string()) throw DecodeError(at(path, "type") + ": expected string");
  const auto type = type_doc.get<std::string>();
  auto node = [&](const char* key) { return as_node(member(doc, key, path), at(path, key)); };
  if (type == "flip") return Flip{node("u"), node("v")};
  if (type == "rewire") return Rewire{node("u"), node("v"), node("s")};
  if (type == "swap") return Swap{node("u"), node("v"), node("s")};
  if (type == "inject") {
    Inject inj;
    if (doc.contains("label")) {
      inj.attribute = as_int(doc["label"], at(path, "label"));
    } else {
      inj.attribute = as_double_vector(member(doc, "features", path), at(path, "features"));
    }
    const auto cp = at(path, "connections");
    const auto& arr = as_array(member(doc, "connections", path), cp);
    for (std::size_t i = 0; i < arr.size(); ++i) inj.connections.push_back(as_node(arr[i], at(cp, i)));
    return inj;
  }
  throw DecodeError(at(path, "type") + ": unknown perturbation type '" + type + "'");
}

ordered_json edits_to_value(const EditSet& edits) {
  ordered_json arr = ordered_json::array();
  for (const auto& p : edits) arr.push_back(perturbation_to_value(p));
  return arr;
}

EditSet value_to_edits(const ordered_json& doc, const std::string& path) {
  const auto& arr = as_array(doc, path);
  EditSet edits;
  for (std::size_t i = 0; i < arr.size(); ++i) edits.push_back(value_to_perturbation(arr[i], at(path, i)));
  return edits;
}

ordered_json dataset_to_value(const LabeledDataset& ds) {
  ordered_json doc;
  doc["num_classes"] = ds.num_classes;
  ordered_json graphs = ordered_json::array();
  for (const auto& g : ds.graphs) graphs.push_back(graph_to_value(g));
  doc["graphs"] = std::move(graphs);
  doc["labels"] = ds.labels;
  doc["split"] = {{"train", ds.split.train},
                  {"validation", ds.split.validation},
                  {"test", ds.split.test}};
  return doc;
}

LabeledDataset value_to_dataset(const ordered_json& doc) {
  LabeledDataset ds;
  ds.num_classes = static_cast<int>(as_int(member(doc, "num_classes", ""), "/num_classes"));
  const auto& graphs = as_array(member(doc, "graphs", ""), "/graphs");
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    ds.graphs.push_back(value_to_graph(graphs[i], at("/graphs", i)));
  }
  const auto& labels = as_array(member(doc, "labels", ""), "/labels");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ds.labels.push_back(static_cast<int>(as_int(labels[i], at("/labels", i))));
  }
  if (doc.contains("split")) {
    const auto& split = doc["split"];
    ds.split.train = as_index_vector(member(split, "train", "/split"), "/split/train");
    ds.split.validation = as_index_vector(member(split, "validation", "/split"), "/split/validation");
    ds.split.test = as_index_vector(member(split, "test", "/split"), "/split/test");
  }
  try {
    ds.validate();
  } catch (const InvalidConfig& e) {
    throw DecodeError(std::string("/: ") + e.what());
  }
  return ds;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path + ": cannot open for writing");
  out << content;
}

}  // namespace detail

std::string graph_to_json(const Graph& g) { return detail::graph_to_value(g).dump(); }

Graph json_to_graph(std::string_view text) { return detail::value_to_graph(detail::parse_json(text)); }

std::string perturbation_to_json(const Perturbation& p) {
  return detail::perturbation_to_value(p).dump();
}

Perturbation json_to_perturbation(std::string_view text) {
  return detail::value_to_perturbation(detail::parse_json(text));
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
  detail::write_file(path.string(), detail::dataset_to_value(ds).dump() + "\n");
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  return detail::value_to_dataset(detail::parse_json(detail::read_file(path.string())));
}

}  // namespace grabnel
