#include "causalfm/cdag.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "causalfm/error.hpp"

namespace causalfm {

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// Kahn's algorithm with ties broken by index; returns empty on a cycle.
std::vector<std::size_t> topo_order(std::size_t n, const std::set<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& e : edges) ++indegree[e.second];
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.insert(i);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const std::size_t next = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(next);
    for (const auto& e : edges) {
      if (e.first == next && --indegree[e.second] == 0) ready.insert(e.second);
    }
  }
  if (order.size() != n) order.clear();
  return order;
}

// Tarjan's SCC labelling.
struct Tarjan {
  const std::vector<std::vector<std::size_t>>& adj;
  std::vector<std::size_t> index, low, component;
  std::vector<bool> on_stack;
  std::vector<std::size_t> stack;
  std::size_t counter = 0;
  std::size_t components = 0;

  explicit Tarjan(const std::vector<std::vector<std::size_t>>& a)
      : adj(a), index(a.size(), kNone), low(a.size(), 0), component(a.size(), kNone),
        on_stack(a.size(), false) {
    for (std::size_t v = 0; v < a.size(); ++v) {
      if (index[v] == kNone) visit(v);
    }
  }

  void visit(std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (std::size_t w : adj[v]) {
      if (index[w] == kNone) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        component[w] = components;
      } while (w != v);
      ++components;
    }
  }
};

Cluster make_cluster(std::string id, std::vector<std::pair<std::string, VarKind>> members) {
  Cluster c;
  c.id = std::move(id);
  for (auto& [name, kind] : members) {
    c.members.push_back(std::move(name));
    c.kinds.push_back(kind);
  }
  return c;
}

Cluster observed(std::string id) { return make_cluster(id, {{id, VarKind::observed}}); }
Cluster noise(std::string id) { return make_cluster(id, {{id, VarKind::latent_noise}}); }

CDag assemble(std::vector<Cluster> clusters, std::vector<ClusterEdge> edges, std::string t,
              std::string o) {
  CDag cdag{std::move(clusters), std::move(edges), std::move(t), std::move(o)};
  std::sort(cdag.edges.begin(), cdag.edges.end());
  cdag.check();
  return cdag;
}

}  // namespace

const Cluster& CDag::cluster(std::string_view id) const { return clusters.at(index_of(id)); }

std::size_t CDag::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (clusters[i].id == id) return i;
  }
  throw InvalidStructureError("unknown cluster '" + std::string(id) + "'");
}

std::string CDag::cluster_of(std::string_view variable) const {
  for (const auto& c : clusters) {
    if (c.contains(variable)) return c.id;
  }
  return {};
}

std::vector<std::string> CDag::parents(std::string_view id) const {
  std::vector<std::string> out;
  for (const auto& [from, to] : edges) {
    if (to == id) out.push_back(from);
  }
  return out;
}

bool CDag::has_edge(std::string_view from, std::string_view to) const {
  return std::any_of(edges.begin(), edges.end(),
                     [&](const ClusterEdge& e) { return e.first == from && e.second == to; });
}

void CDag::check() const {
  std::set<std::string> ids;
  std::set<std::string> members;
  for (const auto& c : clusters) {
    if (!ids.insert(c.id).second) throw InvalidStructureError("duplicate cluster '" + c.id + "'");
    if (c.members.size() != c.kinds.size() || c.members.empty()) {
      throw InvalidStructureError("cluster '" + c.id + "' has malformed members");
    }
    for (const auto& m : c.members) {
      if (!members.insert(m).second) {
        throw InvalidStructureError("variable '" + m + "' appears in two clusters");
      }
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> indexed;
  for (const auto& [from, to] : edges) {
    if (!ids.count(from) || !ids.count(to)) {
      throw InvalidStructureError("edge " + from + " -> " + to + " references an unknown cluster");
    }
    if (from == to) throw InvalidStructureError("self-loop on cluster '" + from + "'");
    indexed.emplace(index_of(from), index_of(to));
  }
  if (!clusters.empty() && topo_order(clusters.size(), indexed).empty()) {
    throw InvalidStructureError("C-DAG contains a cycle");
  }
  for (const std::string* role : {&treatment_id, &outcome_id}) {
    if (!ids.count(*role)) throw InvalidStructureError("missing treatment/outcome cluster '" + *role + "'");
    if (!cluster(*role).all_observed()) {
      throw InvalidStructureError("treatment/outcome cluster '" + *role + "' must be observed");
    }
  }
}

SupportDag support_dag(const Scm& scm) {
  SupportDag dag;
  for (const auto& mech : scm.mechanisms()) {
    for (VarId p : mech.parents) {
      for (VarId o : mech.outputs) {
        dag.edges.emplace_back(scm.variable(p).name, scm.variable(o).name);
      }
    }
  }
  return dag;
}

CDag induce_cdag(const std::vector<SupportDag>& support, const std::vector<Cluster>& clustering,
                 std::string_view treatment, std::string_view outcome) {
  std::map<std::string, std::size_t> owner;
  for (std::size_t i = 0; i < clustering.size(); ++i) {
    for (const auto& m : clustering[i].members) {
      if (!owner.emplace(m, i).second) {
        throw InvalidStructureError("clustering is not a partition: '" + m + "' repeats");
      }
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> arrows;
  for (const auto& dag : support) {
    for (const auto& [from, to] : dag.edges) {
      auto f = owner.find(from);
      auto t = owner.find(to);
      if (f == owner.end() || t == owner.end()) {
        throw InvalidStructureError("support edge " + from + " -> " + to + " uses an unclustered variable");
      }
      if (f->second != t->second) arrows.emplace(f->second, t->second);
    }
  }

  std::vector<std::vector<std::size_t>> adj(clustering.size());
  for (const auto& [a, b] : arrows) adj[a].push_back(b);
  const Tarjan scc(adj);

  // Merged clusters are numbered by their first original member.
  std::vector<std::size_t> group_of_component(scc.components, kNone);
  std::vector<std::size_t> group(clustering.size());
  std::vector<Cluster> merged;
  for (std::size_t i = 0; i < clustering.size(); ++i) {
    std::size_t& g = group_of_component[scc.component[i]];
    if (g == kNone) {
      g = merged.size();
      merged.push_back(Cluster{clustering[i].id, {}, {}});
    } else {
      merged[g].id += "+" + clustering[i].id;
    }
    group[i] = g;
    auto& target = merged[g];
    target.members.insert(target.members.end(), clustering[i].members.begin(), clustering[i].members.end());
    target.kinds.insert(target.kinds.end(), clustering[i].kinds.begin(), clustering[i].kinds.end());
  }
  std::set<std::pair<std::size_t, std::size_t>> merged_arrows;
  for (const auto& [a, b] : arrows) {
    if (group[a] != group[b]) merged_arrows.emplace(group[a], group[b]);
  }
  const auto order = topo_order(merged.size(), merged_arrows);
  std::vector<Cluster> sorted;
  for (std::size_t g : order) sorted.push_back(merged[g]);
  std::vector<ClusterEdge> edges;
  for (const auto& [a, b] : merged_arrows) edges.emplace_back(merged[a].id, merged[b].id);

  CDag cdag{std::move(sorted), std::move(edges), {}, {}};
  cdag.treatment_id = cdag.cluster_of(treatment);
  cdag.outcome_id = cdag.cluster_of(outcome);
  std::sort(cdag.edges.begin(), cdag.edges.end());
  cdag.check();
  return cdag;
}

CDag cdag_of(const Scm& scm) {
  const auto& roles = scm.roles();
  if (!roles.treatment || !roles.outcome) throw PreconditionError("SCM has no treatment/outcome roles");
  CDag cdag;
  for (const auto& c : scm.clusters()) cdag.clusters.push_back(c);
  cdag.edges = scm.cluster_edges();
  cdag.treatment_id = scm.variable(*roles.treatment).cluster;
  cdag.outcome_id = scm.variable(*roles.outcome).cluster;
  std::sort(cdag.edges.begin(), cdag.edges.end());
  cdag.check();
  return cdag;
}

CDagValidity validate_cdag(const CDag& cdag) {
  const auto& t = cdag.treatment_id;
  const auto& o = cdag.outcome_id;
  auto is_confounder = [&](const Cluster& c) {
    return c.all_latent() && cdag.has_edge(c.id, t) && cdag.has_edge(c.id, o);
  };
  auto has_noise_parent = [&](const std::string& id) {
    for (const auto& p : cdag.parents(id)) {
      const Cluster& c = cdag.cluster(p);
      const bool noise_only = std::all_of(c.kinds.begin(), c.kinds.end(),
                                          [](VarKind k) { return k == VarKind::latent_noise; });
      if (noise_only && !is_confounder(c)) return true;
    }
    return false;
  };
  std::string confounder;
  for (const auto& c : cdag.clusters) {
    if (is_confounder(c)) {
      confounder = c.id;
      break;
    }
  }
  if (confounder.empty() || has_noise_parent(t) || has_noise_parent(o)) return {};
  return {false, "latent confounder '" + confounder + "' between '" + t + "' and '" + o +
                     "' while neither has a noise parent"};
}

CDag backdoor_cdag() {
  return assemble({make_cluster("XU", {{"X", VarKind::observed}, {"U_X", VarKind::latent_noise}}),
                   noise("U_A"), noise("U_Y"), observed("A"), observed("Y")},
                  {{"XU", "A"}, {"XU", "Y"}, {"U_A", "A"}, {"A", "Y"}, {"U_Y", "Y"}}, "A", "Y");
}

CDag frontdoor_cdag() {
  return assemble({make_cluster("XU", {{"X", VarKind::observed}, {"U_X", VarKind::latent_noise}}),
                   make_cluster("U", {{"U", VarKind::latent_confounder}}), noise("U_A"),
                   noise("U_M"), noise("U_Y"), observed("A"), observed("M"), observed("Y")},
                  {{"XU", "A"}, {"XU", "M"}, {"XU", "Y"}, {"U", "A"}, {"U", "Y"}, {"U_A", "A"},
                   {"A", "M"}, {"U_M", "M"}, {"M", "Y"}, {"U_Y", "Y"}},
                  "A", "Y");
}

CDag iv_cdag(bool noise_on_treatment, bool noise_on_outcome) {
  std::vector<Cluster> clusters{
      make_cluster("XU", {{"X", VarKind::observed}, {"U_X", VarKind::latent_noise}}),
      noise("U_Z"), make_cluster("U", {{"U", VarKind::latent_confounder}})};
  std::vector<ClusterEdge> edges{{"XU", "Z"}, {"XU", "A"}, {"XU", "Y"}, {"U_Z", "Z"},
                                 {"Z", "A"},  {"U", "A"},  {"U", "Y"},  {"A", "Y"}};
  if (noise_on_treatment) {
    clusters.push_back(noise("U_A"));
    edges.emplace_back("U_A", "A");
  }
  if (noise_on_outcome) {
    clusters.push_back(noise("U_Y"));
    edges.emplace_back("U_Y", "Y");
  }
  clusters.push_back(observed("Z"));
  clusters.push_back(observed("A"));
  clusters.push_back(observed("Y"));
  return assemble(std::move(clusters), std::move(edges), "A", "Y");
}

}  // namespace causalfm
