#include "stresslab/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "stresslab/error.hpp"
#include "stresslab/hash.hpp"
#include "stresslab/rng.hpp"

namespace stresslab::retrieval {

// --- embedder -------------------------------------------------------------------------

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || (c == '.' && !cur.empty())) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      while (!cur.empty() && cur.back() == '.') cur.pop_back();
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  while (!cur.empty() && cur.back() == '.') cur.pop_back();
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

Eigen::VectorXd HashEmbedder::embed(const std::string& text) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  std::map<std::string, int> counts;
  for (auto& t : tokenize(text)) ++counts[t];
  for (const auto& [token, count] : counts) {
    auto d = sha256(token);
    std::uint32_t bucket = (static_cast<std::uint32_t>(d[0]) << 8 | d[1]) % static_cast<std::uint32_t>(dim_);
    double sign = (d[2] & 1) ? -1.0 : 1.0;
    v[bucket] += sign * count;
  }
  double n = v.norm();
  if (n == 0.0) {
    v.setZero();
    v[0] = 1.0;
    return v;
  }
  return v / n;
}

std::string HashEmbedder::provider_id() const { return "hash-bow-sha256-d" + std::to_string(dim_); }

std::string HashEmbedder::weights_hash() const { return sha256_hex("stresslab.HashEmbedder.v1|d=" + std::to_string(dim_)); }

std::uint64_t retrieval_seed(const std::string& country, const std::string& utc_date) {
  auto d = sha256(country + "|" + utc_date);
  std::uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed = (seed << 8) | d[i];
  return seed;
}

// --- flat index -----------------------------------------------------------------------

FlatIndex::FlatIndex(std::size_t dimension, std::uint64_t tie_seed, std::string weights_hash)
    : dim_(dimension), tie_seed_(tie_seed), weights_hash_(std::move(weights_hash)) {
  if (dim_ == 0) throw ConfigError("index dimension must be positive");
}

void FlatIndex::add(std::string id, const Eigen::VectorXd& v) {
  if (static_cast<std::size_t>(v.size()) != dim_) throw ConfigError("vector dimension mismatch for id " + id);
  if (std::abs(v.norm() - 1.0) > 1e-6) throw ConfigError("index rows must be unit-norm (id " + id + ")");
  if (std::find(ids_.begin(), ids_.end(), id) != ids_.end()) throw ConfigError("duplicate index id " + id);
  ids_.push_back(std::move(id));
  data_.insert(data_.end(), v.data(), v.data() + v.size());
}

Eigen::VectorXd FlatIndex::vector(std::size_t row) const {
  return Eigen::Map<const Eigen::VectorXd>(data_.data() + row * dim_, static_cast<Eigen::Index>(dim_));
}

TopKResult FlatIndex::top_k(const Eigen::VectorXd& query, std::size_t k, std::uint64_t tie_seed) const {
  if (k == 0) throw ConfigError("top_k requires k >= 1");
  if (ids_.empty()) throw ConfigError("top_k on an empty index");
  if (static_cast<std::size_t>(query.size()) != dim_) throw ConfigError("query dimension mismatch");
  struct Cand {
    double score;
    std::uint64_t tie;
    std::size_t row;
  };
  std::vector<Cand> cands;
  cands.reserve(ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    double s = 0.0;
    const double* row = data_.data() + r * dim_;
    for (std::size_t j = 0; j < dim_; ++j) s += row[j] * query[static_cast<Eigen::Index>(j)];
    cands.push_back({s, combine_keys(tie_seed, key_from_string(ids_[r])), r});
  }
  std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.tie != b.tie) return a.tie < b.tie;
    return ids_[a.row] < ids_[b.row];
  });
  TopKResult out;
  out.truncated = k > ids_.size();
  for (std::size_t i = 0; i < std::min(k, cands.size()); ++i) out.hits.push_back({ids_[cands[i].row], cands[i].score});
  return out;
}

namespace {

template <class T>
void put_le(std::ofstream& out, T v) {
  unsigned char buf[sizeof(T)];
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(v);
  } else {
    bits = static_cast<std::uint64_t>(v);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::ifstream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw ParseError("truncated index file");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  if constexpr (std::is_same_v<T, double>) {
    return std::bit_cast<double>(bits);
  } else {
    return static_cast<T>(bits);
  }
}

constexpr char kMagic[8] = {'S', 'L', 'F', 'L', 'A', 'T', '0', '1'};

}  // namespace

void FlatIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write index " + path.string());
  out.write(kMagic, sizeof kMagic);
  put_le<std::uint64_t>(out, dim_);
  put_le<std::uint64_t>(out, ids_.size());
  put_le<std::uint64_t>(out, tie_seed_);
  std::string wh = weights_hash_;
  wh.resize(64, '\0');
  out.write(wh.data(), 64);
  for (const auto& id : ids_) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  for (double v : data_) put_le<double>(out, v);
}

FlatIndex FlatIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot read index " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw ParseError("not a flat index file");
  auto d = get_le<std::uint64_t>(in);
  auto n = get_le<std::uint64_t>(in);
  auto seed = get_le<std::uint64_t>(in);
  std::string wh(64, '\0');
  if (!in.read(wh.data(), 64)) throw ParseError("truncated index file");
  wh.erase(wh.find('\0') == std::string::npos ? wh.size() : wh.find('\0'));
  FlatIndex idx(d, seed, wh);
  std::vector<std::string> ids;
  for (std::uint64_t i = 0; i < n; ++i) {
    auto len = get_le<std::uint32_t>(in);
    std::string id(len, '\0');
    if (!in.read(id.data(), len)) throw ParseError("truncated index file");
    ids.push_back(std::move(id));
  }
  idx.ids_ = std::move(ids);
  idx.data_.resize(n * d);
  for (auto& v : idx.data_) v = get_le<double>(in);
  return idx;
}

std::string build_profile(const ingest::CountryBaseline& b) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "Country: %s\nSource vintage: %s\nReal GDP growth (%% y/y): %.2f\n"
                "Headline inflation (%% y/y): %.2f\nShort-term interest rate (%%): %.2f\n",
                b.country.c_str(), b.vintage.c_str(), b.gdp_growth, b.inflation, b.interest_rate);
  return buf;
}

FlatIndex build_profile_index(const std::vector<ingest::CountryBaseline>& baselines,
                              const EmbeddingProvider& embedder, std::uint64_t tie_seed) {
  FlatIndex idx(embedder.dimension(), tie_seed, embedder.weights_hash());
  for (const auto& b : baselines) idx.add(b.country, embedder.embed(build_profile(b)));
  return idx;
}

// --- k-means --------------------------------------------------------------------------

KMeansResult kmeans(const Eigen::MatrixXd& X, const KMeansOptions& opt) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (n == 0 || opt.k == 0) return {};
  const std::size_t k = std::min(opt.k, n);
  CounterRng rng(opt.seed, 0x6b6d65616e73ULL);

  // k-means++ seeding.
  std::vector<std::size_t> centers{static_cast<std::size_t>(rng.below(n))};
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);
  chosen[centers[0]] = true;
  while (centers.size() < k) {
    const auto& c = X.row(static_cast<Eigen::Index>(centers.back()));
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (X.row(static_cast<Eigen::Index>(i)) - c).squaredNorm());
      if (!chosen[i]) total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      double target = rng.uniform() * total, acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        acc += d2[i];
        pick = i;
        if (acc >= target && d2[i] > 0.0) break;
      }
    } else {
      for (std::size_t i = 0; i < n && pick == n; ++i) {
        if (!chosen[i]) pick = i;
      }
    }
    chosen[pick] = true;
    centers.push_back(pick);
  }

  KMeansResult res;
  res.centroids.resize(static_cast<Eigen::Index>(k), X.cols());
  for (std::size_t j = 0; j < k; ++j) res.centroids.row(static_cast<Eigen::Index>(j)) = X.row(static_cast<Eigen::Index>(centers[j]));
  res.assignment.assign(n, 0);

  auto assign = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        double dist = (X.row(static_cast<Eigen::Index>(i)) - res.centroids.row(static_cast<Eigen::Index>(j))).squaredNorm();
        if (dist < best) {
          best = dist;
          res.assignment[i] = j;
        }
      }
    }
    // Refill empty clusters from the largest one.
    for (;;) {
      std::vector<std::size_t> sizes(k, 0);
      for (auto a : res.assignment) ++sizes[a];
      auto empty = std::find(sizes.begin(), sizes.end(), 0);
      if (empty == sizes.end()) break;
      auto largest = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (res.assignment[i] != largest) continue;
        double dist = (X.row(static_cast<Eigen::Index>(i)) - res.centroids.row(static_cast<Eigen::Index>(largest))).squaredNorm();
        if (dist > far_d) {
          far_d = dist;
          far = i;
        }
      }
      auto target = static_cast<std::size_t>(empty - sizes.begin());
      res.assignment[far] = target;
      res.centroids.row(static_cast<Eigen::Index>(target)) = X.row(static_cast<Eigen::Index>(far));
    }
  };

  for (res.iterations = 1; res.iterations <= opt.max_iterations; ++res.iterations) {
    assign();
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), X.cols());
    std::vector<double> counts(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      next.row(static_cast<Eigen::Index>(res.assignment[i])) += X.row(static_cast<Eigen::Index>(i));
      counts[res.assignment[i]] += 1.0;
    }
    double moved = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      next.row(static_cast<Eigen::Index>(j)) /= counts[j];
      moved = std::max(moved, (next.row(static_cast<Eigen::Index>(j)) - res.centroids.row(static_cast<Eigen::Index>(j))).norm());
    }
    res.centroids = std::move(next);
    if (moved < opt.tolerance) break;
  }
  res.iterations = std::min(res.iterations, opt.max_iterations);
  return res;
}

std::vector<std::string> select_diverse_headlines(const ingest::HeadlineSnapshot& snapshot,
                                                  const EmbeddingProvider& provider, std::size_t k,
                                                  std::uint64_t seed) {
  std::vector<std::string> titles;
  for (const auto& h : snapshot.rows) {
    if (!h.is_pad) titles.push_back(h.title);
  }
  if (titles.size() <= k) {
    std::sort(titles.begin(), titles.end());
    return titles;
  }
  Eigen::MatrixXd X(static_cast<Eigen::Index>(titles.size()), static_cast<Eigen::Index>(provider.dimension()));
  for (std::size_t i = 0; i < titles.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = provider.embed(titles[i]).transpose();
  auto km = kmeans(X, {k, seed, 50, 1e-9});

  std::vector<std::string> out;
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t best = titles.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < titles.size(); ++i) {
      if (km.assignment[i] != j) continue;
      double dist = (X.row(static_cast<Eigen::Index>(i)) - km.centroids.row(static_cast<Eigen::Index>(j))).squaredNorm();
      // Near-equal distances (common with hashed bag-of-words rows) break ties by title.
      const double tol = 1e-12 * std::max(1.0, best_d);
      if (best == titles.size() || dist < best_d - tol || (dist <= best_d + tol && titles[i] < titles[best])) {
        best_d = dist;
        best = i;
      }
    }
    if (best < titles.size()) out.push_back(titles[best]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace stresslab::retrieval
