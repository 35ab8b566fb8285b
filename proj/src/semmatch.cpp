#include "l2a/semmatch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "l2a/common.hpp"

namespace l2a::semmatch {

namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Larger is closer for both metrics.
double closeness(const std::vector<double>& a, double norm_a, const std::vector<double>& b, double norm_b,
                 Metric metric) {
  if (metric == Metric::Cosine) {
    double dot = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
    return dot / (norm_a * norm_b);
  }
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += (a[k] - b[k]) * (a[k] - b[k]);
  return -d;
}

void check_embeddings(std::span<const std::vector<double>> embeddings, std::vector<double>& norms) {
  if (embeddings.size() < 2) throw DomainError("semantic matching needs at least two classes");
  const std::size_t dim = embeddings.front().size();
  norms.resize(embeddings.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].size() != dim || dim == 0) throw ShapeError("class embeddings differ in dimension");
    for (double v : embeddings[i]) {
      if (!std::isfinite(v)) throw DomainError("non-finite class embedding");
    }
    norms[i] = norm(embeddings[i]);
    if (norms[i] == 0.0) throw DomainError("class " + std::to_string(i) + " has a zero-norm embedding");
  }
}

std::vector<std::vector<std::size_t>> members_by_class(std::span<const PoolEntry> pool, std::size_t classes) {
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].class_pos >= classes) throw NotFoundError("pool entry references an unknown class");
    members[pool[i].class_pos].push_back(i);
  }
  return members;
}

}  // namespace

std::string_view to_string(Metric metric) { return metric == Metric::Cosine ? "cosine" : "euclidean"; }

std::string_view to_string(PairingMode mode) {
  switch (mode) {
    case PairingMode::Semantic: return "semantic";
    case PairingMode::Random: return "random";
    case PairingMode::IntraClass: return "intra-class";
  }
  return "unknown";
}

Metric parse_metric(std::string_view text) {
  if (text == "cosine") return Metric::Cosine;
  if (text == "euclidean") return Metric::Euclidean;
  throw ConfigError("unknown similarity metric '" + std::string(text) + "'");
}

PairingMode parse_pairing_mode(std::string_view text) {
  if (text == "semantic") return PairingMode::Semantic;
  if (text == "random") return PairingMode::Random;
  if (text == "intra-class") return PairingMode::IntraClass;
  throw ConfigError("unknown pairing mode '" + std::string(text) + "'");
}

ClassMatching nearest_neighbors(std::span<const std::vector<double>> embeddings, Metric metric) {
  std::vector<double> norms;
  check_embeddings(embeddings, norms);
  ClassMatching matching;
  matching.metric = metric;
  matching.neighbor.resize(embeddings.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_j = i;
    for (std::size_t j = 0; j < embeddings.size(); ++j) {
      if (j == i) continue;
      const double s = closeness(embeddings[i], norms[i], embeddings[j], norms[j], metric);
      if (s > best) {
        best = s;
        best_j = j;
      }
    }
    matching.neighbor[i] = best_j;
  }
  return matching;
}

ClassMatching nearest_neighbors(const DatasetManifest& manifest, Metric metric) {
  std::vector<std::vector<double>> embeddings;
  embeddings.reserve(manifest.classes.size());
  for (const auto& cls : manifest.classes) embeddings.push_back(cls.embedding);
  return nearest_neighbors(embeddings, metric);
}

std::size_t nearest_within(std::span<const std::vector<double>> embeddings, std::size_t query,
                           std::span<const std::size_t> candidates, Metric metric) {
  std::vector<double> norms;
  check_embeddings(embeddings, norms);
  double best = -std::numeric_limits<double>::infinity();
  std::size_t best_j = query;
  std::vector<std::size_t> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t j : sorted) {
    if (j == query) continue;
    const double s = closeness(embeddings[query], norms[query], embeddings[j], norms[j], metric);
    if (s > best) {
      best = s;
      best_j = j;
    }
  }
  if (best_j == query) throw DomainError("no other class available to match against");
  return best_j;
}

std::vector<PairCandidate> enumerate_pairs(std::span<const PoolEntry> pool, const ClassMatching& matching,
                                           PairingMode mode) {
  const auto members = members_by_class(pool, matching.neighbor.size());
  std::vector<PairCandidate> out;
  for (const auto& fg : pool) {
    switch (mode) {
      case PairingMode::Semantic:
        for (std::size_t j : members[matching.neighbor[fg.class_pos]]) out.push_back({fg.sample, pool[j].sample});
        break;
      case PairingMode::IntraClass:
        for (std::size_t j : members[fg.class_pos]) {
          if (pool[j].sample != fg.sample) out.push_back({fg.sample, pool[j].sample});
        }
        break;
      case PairingMode::Random:
        for (const auto& bg : pool) {
          if (bg.sample != fg.sample) out.push_back({fg.sample, bg.sample});
        }
        break;
    }
  }
  std::sort(out.begin(), out.end(),
            [](const PairCandidate& a, const PairCandidate& b) { return std::tie(a.fg, a.bg) < std::tie(b.fg, b.bg); });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<PairCandidate> sample_pairs(std::span<const PoolEntry> pool, const ClassMatching& matching,
                                        PairingMode mode, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw DomainError("pair count must be at least 1");
  const auto candidates = enumerate_pairs(pool, matching, mode);
  if (candidates.empty()) throw DomainError("no class has an eligible sample for this pairing mode");
  Rng rng(seed);
  std::vector<PairCandidate> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(candidates[rng.uniform_index(candidates.size())]);
  return out;
}

std::uint64_t search_space_size(std::span<const PoolEntry> pool, const ClassMatching& matching, PairingMode mode) {
  const auto members = members_by_class(pool, matching.neighbor.size());
  const std::uint64_t n = pool.size();
  switch (mode) {
    case PairingMode::Random: return n == 0 ? 0 : n * (n - 1);
    case PairingMode::Semantic: {
      std::uint64_t total = 0;
      for (std::size_t c = 0; c < members.size(); ++c) total += members[c].size() * members[matching.neighbor[c]].size();
      return total;
    }
    case PairingMode::IntraClass: {
      std::uint64_t total = 0;
      for (const auto& m : members) total += m.empty() ? 0 : m.size() * (m.size() - 1);
      return total;
    }
  }
  return 0;
}

std::uint64_t search_space_size(const DatasetManifest& manifest, const ClassMatching& matching, PairingMode mode) {
  std::vector<PoolEntry> pool;
  for (const auto& s : manifest.samples) {
    if (s.split == SplitTag::TrainLabeled || s.split == SplitTag::TrainUnlabeled) {
      pool.push_back({s.id, manifest.class_index(s.class_id)});
    }
  }
  return search_space_size(pool, matching, mode);
}

}  // namespace l2a::semmatch
