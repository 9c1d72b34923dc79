#include "compofun/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "compofun/primitives.hpp"

namespace cf {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::vector<std::string>& allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw SchemaError(where + ": unknown field \"" + it.key() + "\"");
  }
}

const json& field(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing field \"" + key + "\"");
  return *it;
}

}  // namespace

CompositionalFunction parse_dag(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("top level must be an object");
  reject_unknown(doc, {"d", "q", "R", "nodes"}, "top level");
  int d = field(doc, "d", "top level").get<int>();
  int q = field(doc, "q", "top level").get<int>();
  double R = field(doc, "R", "top level").get<double>();
  const json& arr = field(doc, "nodes", "top level");
  if (!arr.is_array() || arr.empty()) throw SchemaError("nodes must be a nonempty array");

  std::vector<NodeSpec> nodes;
  for (size_t i = 0; i < arr.size(); ++i) {
    const json& jn = arr[i];
    std::string where = "nodes[" + std::to_string(i) + "]";
    if (!jn.is_object()) throw SchemaError(where + ": must be an object");
    reject_unknown(jn, {"id", "kind", "primitive", "params", "layer", "inputs",
                        "R_ij", "m_ij"},
                   where);
    NodeSpec n;
    n.id = field(jn, "id", where).get<std::string>();
    where = "node \"" + n.id + "\"";
    n.kind = node_kind_from_string(field(jn, "kind", where).get<std::string>());
    n.prim = field(jn, "primitive", where).get<std::string>();
    if (n.kind != NodeKind::input && !has_primitive(n.prim))
      throw SchemaError(where + ": unknown primitive \"" + n.prim + "\"");
    n.params = field(jn, "params", where).get<std::vector<double>>();
    n.layer = field(jn, "layer", where).get<int>();
    const json& ins = field(jn, "inputs", where);
    if (!ins.is_array()) throw SchemaError(where + ": inputs must be an array");
    for (const auto& je : ins) {
      reject_unknown(je, {"src", "slot"}, where + " input");
      n.inputs.push_back({field(je, "src", where).get<std::string>(),
                          field(je, "slot", where).get<int>()});
    }
    n.R_ij = field(jn, "R_ij", where).get<double>();
    n.m_ij = field(jn, "m_ij", where).get<int>();
    nodes.push_back(std::move(n));
  }
  return CompositionalFunction(d, q, R, std::move(nodes));
}

std::string dag_to_json(const CompositionalFunction& f) {
  json doc;
  doc["d"] = f.d();
  doc["q"] = f.q();
  doc["R"] = f.R();
  doc["nodes"] = json::array();
  for (const auto& n : f.nodes()) {
    json jn;
    jn["id"] = n.id;
    jn["kind"] = to_string(n.kind);
    jn["primitive"] = n.prim;
    jn["params"] = n.params;
    jn["layer"] = n.layer;
    jn["inputs"] = json::array();
    for (const auto& e : n.inputs) jn["inputs"].push_back({{"src", e.src}, {"slot", e.slot}});
    jn["R_ij"] = n.R_ij;
    jn["m_ij"] = n.m_ij;
    doc["nodes"].push_back(std::move(jn));
  }
  return doc.dump(2) + "\n";
}

CompositionalFunction load_dag(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto f = parse_dag(ss.str());
  auto rep = validate(f, 128);
  if (!rep.pass)
    throw SchemaError(path + ": " + rep.issues.front().category + ": " +
                      rep.issues.front().message);
  return f;
}

void save_dag(const CompositionalFunction& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << dag_to_json(f);
}

std::string features_to_json(const Features& ft) {
  json doc;
  doc["empty"] = ft.empty;
  doc["r_max"] = ft.r_max;
  doc["Lambda"] = ft.Lambda;
  doc["L_max"] = ft.L_max;
  doc["n_general"] = ft.n_general;
  doc["p"] = ft.p == kInf ? json("inf") : json(ft.p);
  doc["per_node"] = json::array();
  for (const auto& pf : ft.per_node)
    doc["per_node"].push_back({{"id", pf.id},
                               {"d_ij", pf.d_ij},
                               {"m_ij", pf.m_ij},
                               {"R_ij", pf.R_ij},
                               {"L_ij", pf.L_ij},
                               {"sobolev", pf.sobolev}});
  return doc.dump(2) + "\n";
}

std::string features_to_csv(const Features& ft) {
  std::ostringstream out;
  out << "id,d_ij,m_ij,R_ij,L_ij,sobolev\n";
  out.precision(17);
  for (const auto& pf : ft.per_node)
    out << pf.id << ',' << pf.d_ij << ',' << pf.m_ij << ',' << pf.R_ij << ','
        << pf.L_ij << ',' << pf.sobolev << '\n';
  return out.str();
}

}  // namespace cf
