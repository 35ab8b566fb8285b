#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "l2a/manifest.hpp"

namespace l2a::semmatch {

enum class Metric { Cosine, Euclidean };
enum class PairingMode { Semantic, Random, IntraClass };

std::string_view to_string(Metric metric);
std::string_view to_string(PairingMode mode);
Metric parse_metric(std::string_view text);
PairingMode parse_pairing_mode(std::string_view text);

/// neighbor[i] is the position of class i's nearest other class.
struct ClassMatching {
  std::vector<std::size_t> neighbor;
  Metric metric = Metric::Cosine;
};

/// Each class paired with argmax cosine similarity (or argmin distance) over
/// the other classes; ties go to the lowest class position.
ClassMatching nearest_neighbors(std::span<const std::vector<double>> embeddings, Metric metric = Metric::Cosine);

/// Convenience overload over the manifest's class table.
ClassMatching nearest_neighbors(const DatasetManifest& manifest, Metric metric = Metric::Cosine);

/// Nearest neighbor restricted to a subset of classes (positions into embeddings).
std::size_t nearest_within(std::span<const std::vector<double>> embeddings, std::size_t query,
                           std::span<const std::size_t> candidates, Metric metric = Metric::Cosine);

/// A sample eligible for pairing and the class used for matching it (the
/// true class, or the pseudo-label for pseudo-labeled samples).
struct PoolEntry {
  SampleId sample = 0;
  std::size_t class_pos = 0;
};

struct PairCandidate {
  SampleId fg = 0;
  SampleId bg = 0;
  double score = 0.0;
  int action = 0;
  bool operator==(const PairCandidate&) const = default;
};

/// Every ordered pair the mode allows, sorted by (fg, bg).
std::vector<PairCandidate> enumerate_pairs(std::span<const PoolEntry> pool, const ClassMatching& matching,
                                           PairingMode mode);

/// count independent uniform draws from enumerate_pairs(...).
std::vector<PairCandidate> sample_pairs(std::span<const PoolEntry> pool, const ClassMatching& matching,
                                        PairingMode mode, std::size_t count, std::uint64_t seed);

/// Number of candidate ordered pairs among the manifest's training samples.
std::uint64_t search_space_size(const DatasetManifest& manifest, const ClassMatching& matching, PairingMode mode);

/// Same count over an explicit pool.
std::uint64_t search_space_size(std::span<const PoolEntry> pool, const ClassMatching& matching, PairingMode mode);

}  // namespace l2a::semmatch
