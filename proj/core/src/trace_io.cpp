#include "grabnel/trace_io.hpp"

#include <algorithm>
#include <cmath>

#include "grabnel/errors.hpp"
#include "json_internal.hpp"

namespace grabnel {

using detail::ordered_json;

namespace {

ordered_json loss_value(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

double value_loss(const ordered_json& v, const std::string& path) {
  if (v.is_null()) return -HUGE_VAL;
  return detail::as_double(v, path);
}

std::size_t as_count(const ordered_json& v, const std::string& path) {
  const auto x = detail::as_int(v, path);
  if (x < 0) throw DecodeError(path + ": expected a non-negative integer");
  return static_cast<std::size_t>(x);
}

ordered_json optional_int(const std::optional<int>& x) {
  if (x) return *x;
  return nullptr;
}

}  // namespace

bool same_result(const AttackResult& a, const AttackResult& b) {
  auto same_records = [](const std::vector<QueryRecord>& x, const std::vector<QueryRecord>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].stage != y[i].stage || x[i].edits != y[i].edits || x[i].queries != y[i].queries) return false;
      if (x[i].loss != y[i].loss && !(std::isinf(x[i].loss) && std::isinf(y[i].loss))) return false;
    }
    return true;
  };
  const auto& ta = a.trace;
  const auto& tb = b.trace;
  return a.success == b.success && a.queries == b.queries && a.edits == b.edits && a.net_edits == b.net_edits &&
         a.loss_curve == b.loss_curve && a.adversarial == b.adversarial && ta.attacker == tb.attacker &&
         ta.true_label == tb.true_label && ta.target == tb.target && ta.budget.edits == tb.budget.edits &&
         ta.budget.queries == tb.budget.queries && ta.committed == tb.committed &&
         same_records(ta.records, tb.records);
}

bool TraceDocument::operator==(const TraceDocument& other) const {
  return graph_index == other.graph_index && original == other.original && same_result(result, other.result);
}

std::string trace_to_json(const TraceDocument& doc) {
  const AttackResult& r = doc.result;
  const AttackTrace& t = r.trace;
  ordered_json j;
  j["graph_index"] = doc.graph_index;
  j["attacker"] = t.attacker;
  j["true_label"] = t.true_label;
  j["target"] = optional_int(t.target);
  j["budget"] = {{"edits", t.budget.edits}, {"queries", t.budget.queries}};
  j["success"] = r.success;
  j["queries"] = r.queries;
  j["net_edits"] = r.net_edits;
  j["edits"] = detail::edits_to_value(r.edits);
  j["original"] = detail::graph_to_value(doc.original);
  j["adversarial"] = r.adversarial ? detail::graph_to_value(*r.adversarial) : ordered_json(nullptr);
  ordered_json committed = ordered_json::array();
  for (const auto& c : t.committed) committed.push_back(detail::edits_to_value(c));
  j["committed"] = std::move(committed);
  ordered_json records = ordered_json::array();
  for (const auto& q : t.records) {
    ordered_json rec;
    rec["stage"] = q.stage;
    rec["edits"] = detail::edits_to_value(q.edits);
    rec["loss"] = loss_value(q.loss);
    rec["queries"] = q.queries;
    records.push_back(std::move(rec));
  }
  j["records"] = std::move(records);
  ordered_json curve = ordered_json::array();
  for (double x : r.loss_curve) curve.push_back(loss_value(x));
  j["loss_curve"] = std::move(curve);
  return j.dump(1) + "\n";
}

TraceDocument trace_from_json(const std::string& text) {
  const ordered_json j = detail::parse_json(text);
  using detail::member;
  TraceDocument doc;
  AttackResult& r = doc.result;
  AttackTrace& t = r.trace;
  doc.graph_index = as_count(member(j, "graph_index", ""), "/graph_index");
  const auto& attacker = member(j, "attacker", "");
  if (!attacker.is_string()) throw DecodeError("/attacker: expected string");
  t.attacker = attacker.get<std::string>();
  t.true_label = static_cast<int>(detail::as_int(member(j, "true_label", ""), "/true_label"));
  const auto& target = member(j, "target", "");
  if (!target.is_null()) t.target = static_cast<int>(detail::as_int(target, "/target"));
  const auto& budget = member(j, "budget", "");
  t.budget.edits = as_count(member(budget, "edits", "/budget"), "/budget/edits");
  t.budget.queries = as_count(member(budget, "queries", "/budget"), "/budget/queries");
  const auto& success = member(j, "success", "");
  if (!success.is_boolean()) throw DecodeError("/success: expected boolean");
  r.success = success.get<bool>();
  r.queries = as_count(member(j, "queries", ""), "/queries");
  r.net_edits = as_count(member(j, "net_edits", ""), "/net_edits");
  r.edits = detail::value_to_edits(member(j, "edits", ""), "/edits");
  doc.original = detail::value_to_graph(member(j, "original", ""), "/original");
  const auto& adv = member(j, "adversarial", "");
  if (!adv.is_null()) r.adversarial = detail::value_to_graph(adv, "/adversarial");
  const auto& committed = detail::as_array(member(j, "committed", ""), "/committed");
  for (std::size_t i = 0; i < committed.size(); ++i) {
    t.committed.push_back(detail::value_to_edits(committed[i], "/committed/" + std::to_string(i)));
  }
  const auto& records = detail::as_array(member(j, "records", ""), "/records");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::string p = "/records/" + std::to_string(i);
    QueryRecord q;
    q.stage = as_count(member(records[i], "stage", p), p + "/stage");
    q.edits = detail::value_to_edits(member(records[i], "edits", p), p + "/edits");
    q.loss = value_loss(member(records[i], "loss", p), p + "/loss");
    q.queries = as_count(member(records[i], "queries", p), p + "/queries");
    t.records.push_back(std::move(q));
  }
  const auto& curve = detail::as_array(member(j, "loss_curve", ""), "/loss_curve");
  for (std::size_t i = 0; i < curve.size(); ++i) r.loss_curve.push_back(value_loss(curve[i], "/loss_curve/" + std::to_string(i)));
  return doc;
}

void save_trace(const TraceDocument& doc, const std::filesystem::path& path) {
  detail::write_file(path.string(), trace_to_json(doc));
}

TraceDocument load_trace(const std::filesystem::path& path) { return trace_from_json(detail::read_file(path.string())); }

std::vector<TraceDocument> load_trace_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<TraceDocument> docs;
  for (const auto& f : files) docs.push_back(load_trace(f));
  std::stable_sort(docs.begin(), docs.end(),
                   [](const TraceDocument& a, const TraceDocument& b) { return a.graph_index < b.graph_index; });
  return docs;
}

}  // namespace grabnel
