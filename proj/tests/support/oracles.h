#pragma once

// Reference computations written independently of the library code.

#include <Eigen/Dense>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace feedwarden::oracle {

// Bag-of-buckets for ASCII text: split on non-alphanumerics, lowercase,
// FNV-1a 64 each token into one of `dim` buckets.
inline std::map<std::size_t, double> bag(const std::string& text, std::size_t dim = 384) {
  std::map<std::size_t, double> out;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : token) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    out[h % dim] += 1.0;
    token.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

inline double cosine(const std::string& a, const std::string& b, std::size_t dim = 384) {
  const auto x = bag(a, dim);
  const auto y = bag(b, dim);
  double dot = 0, nx = 0, ny = 0;
  for (const auto& [k, v] : x) {
    nx += v * v;
    if (auto it = y.find(k); it != y.end()) dot += v * it->second;
  }
  for (const auto& [k, v] : y) ny += v * v;
  return dot / std::sqrt(nx * ny);
}

// Personalized PageRank by dense linear solve of (I - a M~^T) PR = (1 - a) p,
// where M~ is the row-stochastic transition matrix with dangling rows
// replaced by p. Edges join i != j when cosine(desc_i, desc_j) >= tau.
inline std::vector<double> dense_ppr(const std::vector<std::string>& descriptions,
                                     const std::vector<double>& weights, double tau, double alpha,
                                     bool similarity_weighted) {
  const auto n = static_cast<Eigen::Index>(descriptions.size());
  Eigen::VectorXd p(n);
  double total = 0;
  for (double w : weights) total += std::fabs(w);
  for (Eigen::Index i = 0; i < n; ++i) p(i) = std::fabs(weights[i]) / total;

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double s = cosine(descriptions[i], descriptions[j]);
      if (s >= tau) m(i, j) = similarity_weighted ? s : 1.0;
    }
    const double row = m.row(i).sum();
    if (row > 0) {
      m.row(i) /= row;
    } else {
      m.row(i) = p.transpose();
    }
  }
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - alpha * m.transpose();
  const Eigen::VectorXd x = a.fullPivLu().solve((1.0 - alpha) * p);
  return {x.data(), x.data() + n};
}

}  // namespace feedwarden::oracle
