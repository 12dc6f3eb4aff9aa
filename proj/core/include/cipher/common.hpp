#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cipher {

using TokenId = std::int32_t;

/// Next-position logits over the vocabulary, length V.
using LogitVector = std::vector<float>;

// ----------------------------------------------------------------------------
// Error taxonomy
//
// The CLI maps these onto exit codes: bad configs or malformed input files
// exit 2, generation failures exit 3, filesystem failures exit 4.
// ----------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration or inconsistent parameters.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Malformed file contents (bad magic, truncation, version mismatch).
class FormatError : public Error {
public:
  using Error::Error;
};

/// Tensor or vector dimensions disagree with the expected shape.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
  using Error::Error;
};

/// Text that cannot be segmented with the given vocabulary.
class TokenizeError : public Error {
public:
  using Error::Error;
};

/// Filesystem-level failure (open, write, rename).
class IoError : public Error {
public:
  using Error::Error;
};

/// Failure while generating a response.
class GenerationError : public Error {
public:
  using Error::Error;
};

/// The context hit the model's maximum sequence length mid-generation.
/// Knows how many steps completed before truncation.
class ContextOverflowError : public GenerationError {
public:
  ContextOverflowError(const std::string& msg, std::size_t completed_steps)
      : GenerationError(msg), completed_steps_(completed_steps) {}

  std::size_t completed_steps() const { return completed_steps_; }

private:
  std::size_t completed_steps_;
};

// ----------------------------------------------------------------------------
// Randomness
// ----------------------------------------------------------------------------

/// mt19937_64 wrapper that counts every draw. Sampling one token consumes
/// exactly one draw; embedding-space generation consumes none, and tests
/// assert both via this counter.
///
/// All derived draws are computed by hand rather than through the std
/// distribution adaptors, whose algorithms differ between standard
/// libraries; given a seed, the stream is the same everywhere mt19937_64 is.
class CountingRng {
public:
  explicit CountingRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() {
    ++draws_;
    return engine_();
  }

  /// Uniform in [0, 1) using the top 53 bits of a single draw.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, n). One draw; modulo bias is irrelevant at these sizes.
  std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  /// Standard normal via Box-Muller; two draws on the first call of a pair,
  /// none on the second.
  double next_gaussian();

  std::uint64_t draws() const { return draws_; }

private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Folds an ordered list of components into one stream seed, so that
/// (seed, task, round, debater, purpose) tuples get independent streams.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

// ----------------------------------------------------------------------------
// Digests
// ----------------------------------------------------------------------------

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64(const std::string& text);

/// 16-hex-digit rendering used for config and embedding digests.
std::string digest_hex(std::uint64_t value);

}  // namespace cipher
