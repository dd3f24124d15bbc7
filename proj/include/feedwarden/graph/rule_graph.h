#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "feedwarden/core/model.h"
#include "feedwarden/embedding/embedding.h"

namespace feedwarden {

inline constexpr double kDefaultEdgeThreshold = 0.65;
inline constexpr double kDefaultDamping = 0.85;

enum class TransitionMode { kUniform, kSimilarityWeighted };

std::string_view to_string(TransitionMode mode);
TransitionMode parse_transition_mode(std::string_view text);

struct RuleEdge {
  std::string a;
  std::string b;
  double similarity = 0.0;
};

/// Semantic association graph over active rules. An undirected edge joins two
/// rules whose description embeddings have cosine >= edge_threshold; the
/// transition matrix walks both directions.
class RuleGraph {
 public:
  RuleGraph() = default;
  RuleGraph(double edge_threshold, TransitionMode mode);

  // Inactive rules are skipped. Throws kProviderUnavailable from the provider;
  // the graph can simply be rebuilt later.
  static RuleGraph build(const std::vector<Rule>& rules, const EmbeddingProvider& provider,
                         double edge_threshold = kDefaultEdgeThreshold,
                         TransitionMode mode = TransitionMode::kUniform);

  // Embeds only the new rule and tests its pairs against existing nodes.
  // Re-adding an existing id replaces that node.
  void add_rule(const Rule& rule, const EmbeddingProvider& provider);
  void remove_rule(std::string_view id);

  std::size_t size() const { return nodes_.size(); }
  std::vector<std::string> ids() const;
  std::optional<std::size_t> index_of(std::string_view id) const;
  const std::string& id_at(std::size_t i) const { return nodes_[i].id; }
  double weight_at(std::size_t i) const { return nodes_[i].weight; }

  std::vector<RuleEdge> edges() const;
  const std::vector<std::pair<std::size_t, double>>& neighbors(std::size_t i) const {
    return adjacency_[i];
  }
  bool dangling(std::size_t i) const { return adjacency_[i].empty(); }

  // Outgoing transition probabilities of row i; empty for dangling rows.
  std::vector<std::pair<std::size_t, double>> transition_row(std::size_t i) const;

  double edge_threshold() const { return edge_threshold_; }
  TransitionMode mode() const { return mode_; }

 private:
  struct Node {
    std::string id;
    double weight = 0.0;
    EmbeddingVector embedding;
  };

  void link(std::size_t i, std::size_t j, double similarity);

  std::vector<Node> nodes_;
  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency_;
  double edge_threshold_ = kDefaultEdgeThreshold;
  TransitionMode mode_ = TransitionMode::kUniform;
};

// p_i = |w_i| / sum_j |w_j|, aligned with the graph's node order.
std::vector<double> personalization_prior(const RuleGraph& graph);
std::vector<double> personalization_prior(const std::vector<double>& weights);

struct PageRankOptions {
  double damping = kDefaultDamping;
  double tolerance = 1e-10;
  int max_iterations = 200;
};

struct PageRankVector {
  std::vector<std::string> ids;
  std::vector<double> scores;  // aligned with ids
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;

  std::map<std::string, double> by_id() const;
};

// Power iteration on PR = a * M~^T PR + (1 - a) p starting from the prior (or
// the warm start, matched by rule id). Dangling rows teleport along p. Never
// throws on non-convergence: the last iterate comes back with converged=false.
PageRankVector personalized_pagerank(const RuleGraph& graph, const std::vector<double>& prior,
                                     const PageRankOptions& options = {},
                                     const PageRankVector* warm_start = nullptr);

struct RankedRule {
  std::string id;
  double score = 0.0;
  friend bool operator==(const RankedRule&, const RankedRule&) = default;
};

// Top-n rules by score, ties by id.
std::vector<RankedRule> meta_preference_ranking(const PageRankVector& pr, std::size_t n);

nlohmann::json graph_dump(const RuleGraph& graph, const PageRankVector& pr);

}  // namespace feedwarden
