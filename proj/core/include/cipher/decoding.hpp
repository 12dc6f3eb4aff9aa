#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cipher/embedding.hpp"
#include "cipher/model.hpp"

namespace cipher::decoding {

/// Temperatures below this are clamped up, realizing the T -> 0 greedy limit
/// without dividing by zero.
inline constexpr double kTemperatureFloor = 1e-4;

/// The per-step probability vector over the vocabulary: softmax(logits / T).
using Belief = std::vector<double>;

enum class Mode { natural, cipher, partial };

enum class GateKind { entropy, max, entropy_reversed, max_reversed };

/// Per-step choice between embedding averaging and greedy row emission.
/// The plain kinds average when uncertainty exceeds the threshold; the
/// reversed kinds average when it does not.
struct UncertaintyGate {
  GateKind kind = GateKind::entropy;
  double threshold = 0.0;

  bool fires(double uncertainty_value) const;
};

enum class Metric { squared_euclidean, cosine };

enum class StopReason { eos_nearest, eos_sampled, length_limit };

struct GenerationParams {
  double temperature = 1.0;
  int max_new = 128;
  Mode mode = Mode::cipher;
  std::optional<UncertaintyGate> gate;  // required for Mode::partial
  std::uint64_t seed = 0;               // natural mode only
  Metric metric = Metric::squared_euclidean;

  void validate() const;
};

/// softmax(logits / T) with max subtraction, accumulated in double.
/// T is clamped to kTemperatureFloor. Throws NumericError on non-finite logits.
Belief belief(const LogitVector& logits, double temperature);

/// Draws id i with probability belief[i], consuming exactly one RNG draw.
TokenId sample_token(const Belief& belief, CountingRng& rng);

/// The expected token embedding under the belief: sum_i p_i * row_i.
/// A convex combination of table rows, so every coordinate stays inside the
/// table's coordinate-wise bounds.
std::vector<float> cipher_step(const Belief& belief, const EmbeddingTable& table);

/// Argmin of the configured distance over all rows; ties break to the lowest
/// token id.
TokenId nn_decode(std::span<const float> vector, const EmbeddingTable& table,
                  Metric metric = Metric::squared_euclidean);

std::vector<TokenId> nn_decode_seq(const EmbeddingSeq& vectors, const EmbeddingTable& table,
                                   Metric metric = Metric::squared_euclidean);

/// entropy: -sum p ln p (0 ln 0 := 0). max: 1 - max_i p_i. The reversed
/// kinds report the same value; reversal changes the gate comparison only.
double uncertainty(const Belief& belief, GateKind kind);

/// Highest-probability id, lowest id on ties.
TokenId argmax_token(const Belief& belief);
TokenId argmax_logit(const LogitVector& logits);

struct NaturalSequence {
  std::vector<TokenId> ids;  // EOS not included
  StopReason stop_reason = StopReason::length_limit;
};

/// A generated embedding response: the concatenation of every per-step
/// vector, excluding the vector that triggered the EOS stop.
struct CipherSequence {
  EmbeddingSeq vectors;
  StopReason stop_reason = StopReason::length_limit;
};

/// Token-level autoregression: embed history, forward, belief, sample.
/// Stops on sampling EOS or after max_new tokens. Consumes one RNG draw per
/// generated token (including the EOS draw).
NaturalSequence generate_natural(const LanguageModel& model, std::span<const TokenId> prompt,
                                 const GenerationParams& params, CountingRng& rng);

/// Embedding-level autoregression: forward on (prompt ++ generated vectors),
/// belief at T, expected-embedding step, feed the new vector straight back.
/// Stops when the new vector's nearest neighbor is EOS (that vector is
/// dropped) or after max_new steps. Consumes no randomness.
CipherSequence generate_cipher(const LanguageModel& model, const EmbeddingSeq& prompt,
                               const GenerationParams& params);

/// Like generate_cipher, but each step emits the averaged vector only when
/// the gate fires; otherwise it emits the exact embedding row of the argmax
/// token. Same stopping rule, equally deterministic.
CipherSequence generate_partial_cipher(const LanguageModel& model, const EmbeddingSeq& prompt,
                                       const GenerationParams& params);

const char* to_string(StopReason reason);
const char* to_string(Mode mode);
const char* to_string(GateKind kind);
std::optional<Mode> mode_from_string(std::string_view name);
std::optional<GateKind> gate_kind_from_string(std::string_view name);

}  // namespace cipher::decoding
