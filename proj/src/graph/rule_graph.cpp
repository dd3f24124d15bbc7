#include "feedwarden/graph/rule_graph.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "feedwarden/core/error.h"

namespace feedwarden {

std::string_view to_string(TransitionMode mode) {
  return mode == TransitionMode::kUniform ? "uniform" : "similarity_weighted";
}

TransitionMode parse_transition_mode(std::string_view text) {
  if (text == "uniform") return TransitionMode::kUniform;
  if (text == "similarity_weighted") return TransitionMode::kSimilarityWeighted;
  throw Error(ErrorCode::kInvalidArgument, "unknown transition mode '" + std::string(text) + "'");
}

RuleGraph::RuleGraph(double edge_threshold, TransitionMode mode)
    : edge_threshold_(edge_threshold), mode_(mode) {}

RuleGraph RuleGraph::build(const std::vector<Rule>& rules, const EmbeddingProvider& provider,
                           double edge_threshold, TransitionMode mode) {
  RuleGraph graph(edge_threshold, mode);
  for (const auto& rule : rules) {
    if (rule.active) graph.add_rule(rule, provider);
  }
  return graph;
}

void RuleGraph::link(std::size_t i, std::size_t j, double similarity) {
  adjacency_[i].emplace_back(j, similarity);
  adjacency_[j].emplace_back(i, similarity);
}

void RuleGraph::add_rule(const Rule& rule, const EmbeddingProvider& provider) {
  // Embed before mutating so a provider failure leaves the graph unchanged.
  EmbeddingVector embedding = provider.embed_text(rule.description);
  remove_rule(rule.id);
  const std::size_t index = nodes_.size();
  nodes_.push_back({rule.id, rule.weight, std::move(embedding)});
  adjacency_.emplace_back();
  for (std::size_t j = 0; j < index; ++j) {
    const double sim = cosine(nodes_[index].embedding, nodes_[j].embedding);
    if (reaches_threshold(sim, edge_threshold_)) link(j, index, sim);
  }
}

void RuleGraph::remove_rule(std::string_view id) {
  auto found = index_of(id);
  if (!found) return;
  const std::size_t removed = *found;
  nodes_.erase(nodes_.begin() + static_cast<std::ptrdiff_t>(removed));
  adjacency_.erase(adjacency_.begin() + static_cast<std::ptrdiff_t>(removed));
  for (auto& row : adjacency_) {
    std::erase_if(row, [removed](const auto& entry) { return entry.first == removed; });
    for (auto& entry : row) {
      if (entry.first > removed) --entry.first;
    }
  }
}

std::vector<std::string> RuleGraph::ids() const {
  std::vector<std::string> out;
  out.reserve(nodes_.size());
  for (const auto& node : nodes_) out.push_back(node.id);
  return out;
}

std::optional<std::size_t> RuleGraph::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  return std::nullopt;
}

std::vector<RuleEdge> RuleGraph::edges() const {
  std::vector<RuleEdge> out;
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    for (const auto& [j, sim] : adjacency_[i]) {
      if (i < j) out.push_back({nodes_[i].id, nodes_[j].id, sim});
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, double>> RuleGraph::transition_row(std::size_t i) const {
  const auto& row = adjacency_[i];
  std::vector<std::pair<std::size_t, double>> out;
  if (row.empty()) return out;
  out.reserve(row.size());
  if (mode_ == TransitionMode::kUniform) {
    const double p = 1.0 / static_cast<double>(row.size());
    for (const auto& [j, sim] : row) out.emplace_back(j, p);
  } else {
    double total = 0.0;
    for (const auto& [j, sim] : row) total += sim;
    for (const auto& [j, sim] : row) out.emplace_back(j, sim / total);
  }
  return out;
}

std::vector<double> personalization_prior(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += std::fabs(w);
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kAllZeroWeights, "personalization prior needs a nonzero weight");
  }
  std::vector<double> p;
  p.reserve(weights.size());
  for (double w : weights) p.push_back(std::fabs(w) / total);
  return p;
}

std::vector<double> personalization_prior(const RuleGraph& graph) {
  std::vector<double> weights;
  weights.reserve(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) weights.push_back(graph.weight_at(i));
  return personalization_prior(weights);
}

std::map<std::string, double> PageRankVector::by_id() const {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = scores[i];
  return out;
}

PageRankVector personalized_pagerank(const RuleGraph& graph, const std::vector<double>& prior,
                                     const PageRankOptions& options,
                                     const PageRankVector* warm_start) {
  const std::size_t n = graph.size();
  if (prior.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "prior size does not match graph size");
  }
  PageRankVector result;
  result.ids = graph.ids();
  if (n == 0) {
    result.converged = true;
    return result;
  }

  // With no edges every row teleports, so the fixed point is the prior itself.
  bool edgeless = true;
  for (std::size_t i = 0; i < n && edgeless; ++i) edgeless = graph.dangling(i);
  if (edgeless) {
    result.scores = prior;
    result.converged = true;
    return result;
  }

  std::vector<double> pr = prior;
  if (warm_start != nullptr) {
    const auto previous = warm_start->by_id();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto it = previous.find(result.ids[i]);
      pr[i] = it != previous.end() ? it->second : prior[i];
      total += pr[i];
    }
    if (total > 0.0) {
      for (double& x : pr) x /= total;
    } else {
      pr = prior;
    }
  }

  std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = graph.transition_row(i);

  const double alpha = options.damping;
  std::vector<double> next(n);
  result.residual = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    double dangling_mass = 0.0;
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].empty()) {
        dangling_mass += pr[i];
        continue;
      }
      for (const auto& [j, prob] : rows[i]) next[j] += alpha * pr[i] * prob;
    }
    const double teleport = alpha * dangling_mass + (1.0 - alpha);
    double residual = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      next[j] += teleport * prior[j];
      residual += std::fabs(next[j] - pr[j]);
    }
    pr.swap(next);
    result.iterations = iter;
    result.residual = residual;
    if (residual < options.tolerance) {
      result.converged = true;
      break;
    }
  }

  const double total = std::accumulate(pr.begin(), pr.end(), 0.0);
  for (double& x : pr) x /= total;
  result.scores = std::move(pr);
  return result;
}

std::vector<RankedRule> meta_preference_ranking(const PageRankVector& pr, std::size_t n) {
  std::vector<RankedRule> ranked;
  ranked.reserve(pr.ids.size());
  for (std::size_t i = 0; i < pr.ids.size(); ++i) ranked.push_back({pr.ids[i], pr.scores[i]});
  std::sort(ranked.begin(), ranked.end(), [](const RankedRule& a, const RankedRule& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  ranked.resize(std::min(n, ranked.size()));
  return ranked;
}

nlohmann::json graph_dump(const RuleGraph& graph, const PageRankVector& pr) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph.edges()) {
    edges.push_back({{"a", e.a}, {"b", e.b}, {"sim", e.similarity}});
  }
  nlohmann::json scores = nlohmann::json::object();
  for (std::size_t i = 0; i < pr.ids.size(); ++i) scores[pr.ids[i]] = pr.scores[i];
  return {{"nodes", graph.ids()}, {"edges", std::move(edges)}, {"pr", std::move(scores)}};
}

}  // namespace feedwarden
