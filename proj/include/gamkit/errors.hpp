#pragma once

#include <stdexcept>
#include <string>

namespace gamkit {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Model / capture
struct UnsupportedModel : Error { using Error::Error; };
struct InputShapeError : Error { using Error::Error; };
struct NonFiniteScore : Error { using Error::Error; };
struct UnknownLayer : Error { using Error::Error; };

// Scoring
struct DegenerateEmbedding : Error { using Error::Error; };
struct UnknownClass : Error { using Error::Error; };

// Grid math / metrics
struct ShapeError : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct InvalidRecord : Error { using Error::Error; };

// Sanity training
struct TrainingBudgetExceeded : Error { using Error::Error; };

// Plumbing
struct IOError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace gamkit
