#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stresslab/ingest.hpp"

namespace stresslab::retrieval {

/// Text embedder producing unit-norm vectors of a fixed dimension.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Eigen::VectorXd embed(const std::string& text) const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::string provider_id() const = 0;
  virtual std::string weights_hash() const = 0;
};

/// Deterministic hashed bag-of-words embedder: each lower-cased alphanumeric token adds
/// a signed unit to the bucket picked by its SHA-256 digest. Texts with no tokens map
/// to the first basis vector.
class HashEmbedder final : public EmbeddingProvider {
 public:
  explicit HashEmbedder(std::size_t dimension = 64) : dim_(dimension) {}
  Eigen::VectorXd embed(const std::string& text) const override;
  std::size_t dimension() const override { return dim_; }
  std::string provider_id() const override;
  std::string weights_hash() const override;

 private:
  std::size_t dim_;
};

std::vector<std::string> tokenize(const std::string& text);

/// First 8 bytes (big-endian) of SHA-256(country + "|" + utc_date).
std::uint64_t retrieval_seed(const std::string& country, const std::string& utc_date);

struct Hit {
  std::string id;
  double score = 0.0;
  bool operator==(const Hit&) const = default;
};

struct TopKResult {
  std::vector<Hit> hits;
  bool truncated = false;  // k exceeded the index size
};

/// Exact inner-product index over unit vectors.
class FlatIndex {
 public:
  FlatIndex(std::size_t dimension, std::uint64_t tie_seed, std::string weights_hash = {});

  /// Throws ConfigError on duplicate id, wrong dimension, or non-unit vector.
  void add(std::string id, const Eigen::VectorXd& vector);

  /// Descending by score; exact ties resolved by a permutation drawn from tie_seed, then id.
  TopKResult top_k(const Eigen::VectorXd& query, std::size_t k) const { return top_k(query, k, tie_seed_); }
  /// Same, with a per-query tie-break seed (e.g. retrieval_seed(country, date)).
  TopKResult top_k(const Eigen::VectorXd& query, std::size_t k, std::uint64_t tie_seed) const;

  std::size_t size() const { return ids_.size(); }
  std::size_t dimension() const { return dim_; }
  std::uint64_t tie_seed() const { return tie_seed_; }
  const std::string& weights_hash() const { return weights_hash_; }
  const std::vector<std::string>& ids() const { return ids_; }
  Eigen::VectorXd vector(std::size_t row) const;

  /// Binary layout: "SLFLAT01", u64 d, u64 n, u64 tie_seed, 64-byte weights hash,
  /// then n x (u32 id length, id bytes), then n*d little-endian f64 row-major.
  void save(const std::filesystem::path& path) const;
  static FlatIndex load(const std::filesystem::path& path);

 private:
  std::size_t dim_;
  std::uint64_t tie_seed_;
  std::string weights_hash_;
  std::vector<std::string> ids_;
  std::vector<double> data_;  // row-major
};

/// Plain-text country profile built from the WEO baseline.
std::string build_profile(const ingest::CountryBaseline& baseline);

/// Index of one profile per country, keyed by country name.
FlatIndex build_profile_index(const std::vector<ingest::CountryBaseline>& baselines,
                              const EmbeddingProvider& embedder, std::uint64_t tie_seed);

struct KMeansOptions {
  std::size_t k = 20;
  std::uint64_t seed = 0;
  int max_iterations = 50;
  double tolerance = 1e-9;
};

/// k-means++ seeding then Lloyd iterations. Empty clusters are refilled from the largest
/// cluster so that min(k, n) clusters are non-empty. Returns the cluster of each point.
struct KMeansResult {
  std::vector<std::size_t> assignment;
  Eigen::MatrixXd centroids;  // k x d
  int iterations = 0;
};
KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options);

/// Up to k diverse real headlines: all of them when there are at most k, otherwise one
/// exemplar per k-means cluster (closest to centroid; ties by title). Output sorted by title.
std::vector<std::string> select_diverse_headlines(const ingest::HeadlineSnapshot& snapshot,
                                                  const EmbeddingProvider& provider, std::size_t k,
                                                  std::uint64_t seed);

}  // namespace stresslab::retrieval
