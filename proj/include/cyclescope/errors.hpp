#pragma once

#include <stdexcept>
#include <string>

namespace cyclescope {

/// Malformed input record (bad JSON, wrong field type). Message names the field.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Structurally valid record violating the span schema (missing field, bad value).
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Trajectory-level invariant violation (dangling parent, parent cycle, duplicate id).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Detector or generator parameter outside its documented domain.
struct ParameterError : std::invalid_argument {
  explicit ParameterError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Value-domain violation (empty stats multiset, dimension mismatch, key-set mismatch).
struct DomainError : std::domain_error {
  explicit DomainError(const std::string& msg) : std::domain_error(msg) {}
};

/// Cosine of a zero vector; callers are expected to skip such pairs.
struct UndefinedSimilarityError : DomainError {
  explicit UndefinedSimilarityError(const std::string& msg) : DomainError(msg) {}
};

/// Embedding provider failure (network, protocol, inconsistent dimensions).
struct ProviderError : std::runtime_error {
  explicit ProviderError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cyclescope
