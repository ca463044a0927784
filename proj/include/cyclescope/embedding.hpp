#pragma once

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cyclescope/errors.hpp"

namespace cyclescope {

using EmbeddingVector = std::vector<double>;

inline bool is_zero_vector(const EmbeddingVector& v) {
  for (double x : v)
    if (x != 0.0) return false;
  return true;
}

namespace detail {

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(const unsigned char* data, std::size_t len) {
  std::uint64_t h = kFnvOffset;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<std::uint64_t>(data[i]);
    h *= kFnvPrime;
  }
  return h;
}

/// Lowercase ASCII, trim, and collapse whitespace runs to single spaces.
inline std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char ch : text) {
    if (std::isspace(ch)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(ch)));
  }
  return out;
}

}  // namespace detail

/// Hashed character-3-gram embedding: deterministic, portable, L2-normalized.
/// Empty or whitespace-only text maps to the all-zero vector.
inline EmbeddingVector builtin_embed(std::string_view text, std::size_t d = 256) {
  if (d < 16) throw ParameterError("builtin embedding dimension must be >= 16");
  EmbeddingVector v(d, 0.0);
  const std::string norm = detail::normalize_text(text);
  if (norm.size() < 3) return v;
  const auto* bytes = reinterpret_cast<const unsigned char*>(norm.data());
  for (std::size_t i = 0; i + 3 <= norm.size(); ++i) {
    const std::uint64_t h = detail::fnv1a64(bytes + i, 3);
    v[h % d] += 1.0;
  }
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
  }
  return v;
}

inline double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.size() != v.size())
    throw DomainError("cosine dimension mismatch: " + std::to_string(u.size()) +
                      " vs " + std::to_string(v.size()));
  if (u == v) {
    if (is_zero_vector(u))
      throw UndefinedSimilarityError("cosine of the zero vector is undefined");
    return 1.0;  // identical vectors compare exactly
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0)
    throw UndefinedSimilarityError("cosine of the zero vector is undefined");
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

/// Deterministic text-to-vector provider. Implementations must return the
/// same vector for the same text within one instance, and must either be
/// safe for concurrent calls or be wrapped per worker.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual const std::string& name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual EmbeddingVector embed(std::string_view text) = 0;

  virtual std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) out.push_back(embed(t));
    return out;
  }
};

class BuiltinEmbedder : public EmbeddingProvider {
 public:
  explicit BuiltinEmbedder(std::size_t d = 256) : dim_(d) {
    if (d < 16)
      throw ParameterError("builtin embedding dimension must be >= 16");
  }

  const std::string& name() const override {
    static const std::string kName = "builtin";
    return kName;
  }
  std::size_t dimension() const override { return dim_; }
  EmbeddingVector embed(std::string_view text) override {
    return builtin_embed(text, dim_);
  }

 private:
  std::size_t dim_;
};

/// Wraps another provider and counts embed invocations (one per text).
class CountingProvider : public EmbeddingProvider {
 public:
  explicit CountingProvider(EmbeddingProvider& inner) : inner_(inner) {}

  const std::string& name() const override { return inner_.name(); }
  std::size_t dimension() const override { return inner_.dimension(); }
  EmbeddingVector embed(std::string_view text) override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.embed(text);
  }
  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) override {
    calls_.fetch_add(texts.size(), std::memory_order_relaxed);
    return inner_.embed_batch(texts);
  }

  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
  void reset() { calls_.store(0, std::memory_order_relaxed); }

 private:
  EmbeddingProvider& inner_;
  std::atomic<std::uint64_t> calls_{0};
};

}  // namespace cyclescope
