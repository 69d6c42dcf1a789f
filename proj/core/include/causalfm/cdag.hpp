#pragma once

#include <string>
#include <utility>
#include <vector>

#include "causalfm/scm.hpp"

namespace causalfm {

using ClusterEdge = std::pair<std::string, std::string>;

// Cluster DAG. Clusters are kept in a topological order.
struct CDag {
  std::vector<Cluster> clusters;
  std::vector<ClusterEdge> edges;
  std::string treatment_id;
  std::string outcome_id;

  const Cluster& cluster(std::string_view id) const;
  std::size_t index_of(std::string_view id) const;
  // Cluster containing a variable; empty string when absent.
  std::string cluster_of(std::string_view variable) const;
  std::vector<std::string> parents(std::string_view id) const;
  bool has_edge(std::string_view from, std::string_view to) const;

  // Throws InvalidStructureError unless the C-DAG is acyclic, every edge
  // references an existing cluster and treatment/outcome are observed clusters.
  void check() const;

  bool operator==(const CDag&) const = default;
};

// A variable-level DAG from the support of a prior.
struct SupportDag {
  std::vector<std::pair<std::string, std::string>> edges;
};

// The skeleton of an SCM: one arrow parent -> output per mechanism input.
SupportDag support_dag(const Scm& scm);

// Arrows between clusters are collected over every support DAG; clusters
// joined by arrows in both directions (more generally, every strongly
// connected set of clusters) are merged, so the result is acyclic.
// Merged clusters take the id "a+b" in the order the clusters were given.
CDag induce_cdag(const std::vector<SupportDag>& support, const std::vector<Cluster>& clustering,
                 std::string_view treatment, std::string_view outcome);

// The C-DAG of a concrete SCM (its own clustering and cluster edges).
CDag cdag_of(const Scm& scm);

struct CDagValidity {
  bool valid = true;
  std::string reason;
};

// A latent-only cluster with arrows into both the treatment and the outcome
// cluster is a confounder. A noise parent is a parent cluster made only of
// latent-noise members that is not itself such a confounder. The C-DAG is
// invalid iff there is a confounder and neither treatment nor outcome has a
// noise parent.
CDagValidity validate_cdag(const CDag& cdag);

// Reference C-DAGs for the three settings.
CDag backdoor_cdag();
CDag frontdoor_cdag();
CDag iv_cdag(bool noise_on_treatment = true, bool noise_on_outcome = true);

}  // namespace causalfm
