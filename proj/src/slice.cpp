#include "slicesim/slice.hpp"

#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "slicesim/errors.hpp"

namespace slicesim {

namespace {

using nlohmann::json;

std::string plane_name(Plane p) {
  return p == Plane::control ? "control" : "data";
}

Plane plane_from(const std::string& s, const std::string& vnf_id) {
  if (s == "control") return Plane::control;
  if (s == "data") return Plane::data;
  throw ValidationError("vnf '" + vnf_id + "': unknown plane '" + s + "'");
}

std::string kind_name(SliceKind k) {
  switch (k) {
    case SliceKind::legitimate: return "legitimate";
    case SliceKind::target: return "target";
    case SliceKind::attacker: return "attacker";
  }
  return "legitimate";
}

SliceKind kind_from(const std::string& s) {
  if (s == "legitimate") return SliceKind::legitimate;
  if (s == "target") return SliceKind::target;
  if (s == "attacker") return SliceKind::attacker;
  throw ValidationError("slice: unknown kind '" + s + "'");
}

void check_range(double lo, double hi, const char* what) {
  if (!(lo > 0.0) || !(hi >= lo)) {
    throw ValidationError(std::string("slice generation: invalid ") + what +
                          " range [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  }
}

}  // namespace

SliceRequest generate_slice(Rng& rng, const SliceGenParams& params) {
  if (params.vnf_count < 1) {
    throw ValidationError("slice generation: vnf_count must be >= 1");
  }
  check_range(params.cpu_demand_min_ghz, params.cpu_demand_max_ghz,
              "cpu demand");
  check_range(params.bw_demand_min_mbps, params.bw_demand_max_mbps,
              "bw demand");
  if (params.proc_delay_min_ms < 0.0 ||
      params.proc_delay_max_ms < params.proc_delay_min_ms) {
    throw ValidationError("slice generation: invalid proc delay range");
  }
  if (params.k_rel_control < 1 || params.k_rel_data < 1) {
    throw ValidationError("slice generation: k_rel values must be >= 1");
  }
  if (!(params.delay_budget_ms > 0.0)) {
    throw ValidationError("slice generation: delay_budget must be > 0");
  }

  const int n = params.vnf_count;
  int control_count =
      params.control_count >= 0 ? params.control_count : n / 2;
  if (control_count > n) {
    throw ValidationError("slice generation: control_count exceeds vnf_count");
  }

  SliceRequest s;
  s.id = params.id;
  s.kind = params.kind;
  s.delay_budget_ms = params.delay_budget_ms;
  s.k_rel_control = params.k_rel_control;
  s.k_rel_data = params.k_rel_data;

  s.vnfs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vnf v;
    v.id = "v" + std::to_string(i);
    v.plane = i < control_count ? Plane::control : Plane::data;
    v.cpu_demand_ghz =
        rng.uniform(params.cpu_demand_min_ghz, params.cpu_demand_max_ghz);
    v.proc_delay_ms =
        rng.uniform(params.proc_delay_min_ms, params.proc_delay_max_ms);
    s.vnfs.push_back(std::move(v));
  }

  // Edge set first (its draws precede bandwidth draws in the stream), then
  // one bandwidth draw per edge in edge order.
  std::vector<std::pair<int, int>> edges;
  if (params.shape == VlinkShape::chain) {
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  } else {
    // Random connected DAG: each VNF after the first picks one earlier parent.
    for (int i = 1; i < n; ++i) {
      int p = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i)));
      edges.emplace_back(p, i);
    }
  }
  s.vlinks.reserve(edges.size());
  for (auto [a, b] : edges) {
    VirtualLink l;
    l.src = s.vnfs[static_cast<std::size_t>(a)].id;
    l.dst = s.vnfs[static_cast<std::size_t>(b)].id;
    l.bw_demand_mbps =
        rng.uniform(params.bw_demand_min_mbps, params.bw_demand_max_mbps);
    s.vlinks.push_back(std::move(l));
  }

  return s;
}

std::vector<SliceRequest> generate_attacker_batch(Rng& rng, std::size_t count,
                                                  const SliceGenParams& params) {
  if (count < 1) {
    throw ValidationError("attacker batch: count must be >= 1");
  }
  std::vector<SliceRequest> batch;
  batch.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SliceGenParams p = params;
    p.id = params.id + "-" + std::to_string(i);
    p.kind = SliceKind::attacker;
    batch.push_back(generate_slice(rng, p));
  }
  return batch;
}

double total_cpu_demand(const SliceRequest& slice) {
  double sum = 0.0;
  for (const auto& v : slice.vnfs) sum += v.cpu_demand_ghz;
  return sum;
}

void validate_slice(const SliceRequest& slice) {
  if (slice.id.empty()) throw ValidationError("slice with empty id");
  if (slice.vnfs.empty()) {
    throw ValidationError("slice '" + slice.id + "': no VNFs");
  }
  if (slice.k_rel_control < 1 || slice.k_rel_data < 1) {
    throw ValidationError("slice '" + slice.id + "': k_rel must be >= 1");
  }
  if (!(slice.delay_budget_ms > 0.0)) {
    throw ValidationError("slice '" + slice.id + "': delay_budget must be > 0");
  }

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < slice.vnfs.size(); ++i) {
    const auto& v = slice.vnfs[i];
    if (v.id.empty()) {
      throw ValidationError("slice '" + slice.id + "': VNF with empty id");
    }
    if (!index.emplace(v.id, i).second) {
      throw ValidationError("slice '" + slice.id + "': duplicate VNF id '" +
                            v.id + "'");
    }
    if (!(v.cpu_demand_ghz > 0.0)) {
      throw ValidationError("vnf '" + v.id + "': cpu_demand must be > 0");
    }
    if (v.proc_delay_ms < 0.0) {
      throw ValidationError("vnf '" + v.id + "': proc_delay < 0");
    }
  }

  std::vector<std::vector<std::size_t>> adj(slice.vnfs.size());
  std::unordered_set<std::string> seen_edges;
  for (const auto& l : slice.vlinks) {
    auto is_ = index.find(l.src);
    if (is_ == index.end()) {
      throw ValidationError("virtual link references unknown VNF '" + l.src +
                            "'");
    }
    auto id_ = index.find(l.dst);
    if (id_ == index.end()) {
      throw ValidationError("virtual link references unknown VNF '" + l.dst +
                            "'");
    }
    if (is_->second == id_->second) {
      throw ValidationError("virtual link self-loop at '" + l.src + "'");
    }
    if (!seen_edges.insert(l.src + "\x1f" + l.dst).second) {
      throw ValidationError("duplicate virtual link " + l.src + "->" + l.dst);
    }
    if (!(l.bw_demand_mbps > 0.0)) {
      throw ValidationError("virtual link " + l.src + "->" + l.dst +
                            ": bw_demand must be > 0");
    }
    adj[is_->second].push_back(id_->second);
    adj[id_->second].push_back(is_->second);
  }

  // Weak connectivity over the undirected shadow of the VNF graph.
  std::vector<char> seen(slice.vnfs.size(), 0);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    std::size_t u = q.front();
    q.pop();
    for (std::size_t v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        q.push(v);
      }
    }
  }
  for (std::size_t i = 0; i < slice.vnfs.size(); ++i) {
    if (!seen[i]) {
      throw ValidationError("slice '" + slice.id +
                            "' is not weakly connected: VNF '" +
                            slice.vnfs[i].id + "' detached");
    }
  }
}

std::string slice_to_json(const SliceRequest& slice) {
  json doc;
  doc["id"] = slice.id;
  doc["kind"] = kind_name(slice.kind);
  doc["delay_budget_ms"] = slice.delay_budget_ms;
  doc["k_rel_control"] = slice.k_rel_control;
  doc["k_rel_data"] = slice.k_rel_data;
  doc["vnfs"] = json::array();
  for (const auto& v : slice.vnfs) {
    doc["vnfs"].push_back({{"id", v.id},
                           {"plane", plane_name(v.plane)},
                           {"cpu_demand_ghz", v.cpu_demand_ghz},
                           {"proc_delay_ms", v.proc_delay_ms}});
  }
  doc["vlinks"] = json::array();
  for (const auto& l : slice.vlinks) {
    doc["vlinks"].push_back(
        {{"src", l.src}, {"dst", l.dst}, {"bw_demand_mbps", l.bw_demand_mbps}});
  }
  return doc.dump(2) + "\n";
}

SliceRequest slice_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("slice: invalid JSON: ") + e.what());
  }

  SliceRequest s;
  try {
    s.id = doc.at("id").get<std::string>();
    s.kind = kind_from(doc.value("kind", "legitimate"));
    s.delay_budget_ms = doc.at("delay_budget_ms").get<double>();
    s.k_rel_control = doc.at("k_rel_control").get<int>();
    s.k_rel_data = doc.at("k_rel_data").get<int>();
    for (const auto& jv : doc.at("vnfs")) {
      Vnf v;
      v.id = jv.at("id").get<std::string>();
      v.plane = plane_from(jv.at("plane").get<std::string>(), v.id);
      v.cpu_demand_ghz = jv.at("cpu_demand_ghz").get<double>();
      v.proc_delay_ms = jv.at("proc_delay_ms").get<double>();
      s.vnfs.push_back(std::move(v));
    }
    if (doc.contains("vlinks")) {
      for (const auto& jl : doc.at("vlinks")) {
        VirtualLink l;
        l.src = jl.at("src").get<std::string>();
        l.dst = jl.at("dst").get<std::string>();
        l.bw_demand_mbps = jl.at("bw_demand_mbps").get<double>();
        s.vlinks.push_back(std::move(l));
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("slice: schema violation: ") + e.what());
  }

  validate_slice(s);
  return s;
}

void save_slice(const SliceRequest& slice, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot open '" + path.string() + "' for writing");
  }
  out << slice_to_json(slice);
  if (!out) throw ValidationError("write to '" + path.string() + "' failed");
}

SliceRequest load_slice(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return slice_from_json(buf.str());
}

}  // namespace slicesim
