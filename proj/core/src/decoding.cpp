#include "cipher/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cipher::decoding {

namespace {

void check_belief(const Belief& b) {
  if (b.empty()) throw ShapeError("belief: empty distribution");
  double sum = 0.0;
  for (double p : b) {
    if (!(p >= 0.0)) throw NumericError("belief: negative or NaN probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw NumericError("belief: probabilities sum to " + std::to_string(sum));
  }
}

double distance(std::span<const float> v, std::span<const float> row, Metric metric) {
  switch (metric) {
    case Metric::squared_euclidean: {
      double acc = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double diff = static_cast<double>(v[i]) - static_cast<double>(row[i]);
        acc += diff * diff;
      }
      return acc;
    }
    case Metric::cosine: {
      double dot = 0.0, nv = 0.0, nr = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        dot += static_cast<double>(v[i]) * static_cast<double>(row[i]);
        nv += static_cast<double>(v[i]) * static_cast<double>(v[i]);
        nr += static_cast<double>(row[i]) * static_cast<double>(row[i]);
      }
      if (nv == 0.0 || nr == 0.0) return 1.0;  // zero vectors carry no direction
      return 1.0 - dot / std::sqrt(nv * nr);
    }
  }
  throw Error("nn_decode: unknown metric");
}

struct EmbeddingStepping {
  const LanguageModel& model;
  const GenerationParams& params;
  const EmbeddingTable& table;

  // Runs the shared embedding-space loop; `emit` turns a belief into the
  // vector appended to the response.
  template <typename EmitFn>
  CipherSequence run(const EmbeddingSeq& prompt, EmitFn emit) const {
    if (prompt.empty()) throw GenerationError("generate: empty prompt context");
    if (prompt.dim() != table.dim()) {
      throw ShapeError("generate: prompt dim " + std::to_string(prompt.dim()) +
                       " != embedding dim " + std::to_string(table.dim()));
    }
    const auto max_len = static_cast<std::size_t>(model.max_seq_len());
    const TokenId eos = model.vocab().eos_id();

    EmbeddingSeq context(prompt.dim());
    context.append(prompt);

    CipherSequence out;
    out.vectors = EmbeddingSeq(table.dim());
    for (int step = 0; step < params.max_new; ++step) {
      if (context.size() > max_len) {
        throw ContextOverflowError(
            "generate: context length " + std::to_string(context.size()) + " exceeds max_seq_len " +
                std::to_string(max_len) + " after " + std::to_string(step) + " steps",
            static_cast<std::size_t>(step));
      }
      const Belief b = belief(model.forward_logits(context), params.temperature);
      const std::vector<float> vec = emit(b);
      if (nn_decode(vec, table, params.metric) == eos) {
        out.stop_reason = StopReason::eos_nearest;
        return out;  // the EOS-step vector is not part of the response
      }
      out.vectors.append(vec);
      context.append(vec);
    }
    out.stop_reason = StopReason::length_limit;
    return out;
  }
};

}  // namespace

bool UncertaintyGate::fires(double uncertainty_value) const {
  switch (kind) {
    case GateKind::entropy:
    case GateKind::max:
      return uncertainty_value > threshold;
    case GateKind::entropy_reversed:
    case GateKind::max_reversed:
      return uncertainty_value <= threshold;
  }
  return false;
}

void GenerationParams::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("generation params: temperature must be > 0");
  if (max_new < 1) throw ConfigError("generation params: max_new must be >= 1");
  if (mode == Mode::partial && !gate.has_value()) {
    throw ConfigError("generation params: partial mode requires an uncertainty gate");
  }
}

Belief belief(const LogitVector& logits, double temperature) {
  if (logits.empty()) throw ShapeError("belief: empty logits");
  const double t = std::max(temperature, kTemperatureFloor);

  float mx = logits[0];
  for (float l : logits) {
    if (!std::isfinite(l)) throw NumericError("belief: non-finite logit");
    mx = std::max(mx, l);
  }
  Belief probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp((static_cast<double>(logits[i]) - static_cast<double>(mx)) / t);
    sum += probs[i];
  }
  const double inv = 1.0 / sum;
  for (auto& p : probs) p *= inv;
  return probs;
}

TokenId sample_token(const Belief& belief, CountingRng& rng) {
  check_belief(belief);
  const double u = rng.next_unit();
  double cum = 0.0;
  for (std::size_t i = 0; i < belief.size(); ++i) {
    cum += belief[i];
    if (u < cum) return static_cast<TokenId>(i);
  }
  // Floating-point tail: u landed past the accumulated mass.
  return static_cast<TokenId>(belief.size() - 1);
}

std::vector<float> cipher_step(const Belief& belief, const EmbeddingTable& table) {
  check_belief(belief);
  if (static_cast<int>(belief.size()) != table.vocab_size()) {
    throw ShapeError("cipher_step: belief size " + std::to_string(belief.size()) +
                     " != table rows " + std::to_string(table.vocab_size()));
  }
  const int d = table.dim();
  std::vector<double> acc(static_cast<std::size_t>(d), 0.0);
  for (std::size_t i = 0; i < belief.size(); ++i) {
    const double p = belief[i];
    if (p == 0.0) continue;
    const auto row = table.row(static_cast<TokenId>(i));
    for (int c = 0; c < d; ++c) acc[static_cast<std::size_t>(c)] += p * static_cast<double>(row[static_cast<std::size_t>(c)]);
  }
  std::vector<float> out(static_cast<std::size_t>(d));
  for (int c = 0; c < d; ++c) out[static_cast<std::size_t>(c)] = static_cast<float>(acc[static_cast<std::size_t>(c)]);
  return out;
}

TokenId nn_decode(std::span<const float> vector, const EmbeddingTable& table, Metric metric) {
  if (vector.size() != static_cast<std::size_t>(table.dim())) {
    throw ShapeError("nn_decode: vector dim " + std::to_string(vector.size()) + " != table dim " +
                     std::to_string(table.dim()));
  }
  TokenId best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (TokenId id = 0; id < table.vocab_size(); ++id) {
    const double dist = distance(vector, table.row(id), metric);
    if (dist < best_dist) {  // strict: ties keep the lowest id
      best_dist = dist;
      best = id;
    }
  }
  return best;
}

std::vector<TokenId> nn_decode_seq(const EmbeddingSeq& vectors, const EmbeddingTable& table,
                                   Metric metric) {
  std::vector<TokenId> ids;
  ids.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) ids.push_back(nn_decode(vectors.at(i), table, metric));
  return ids;
}

double uncertainty(const Belief& belief, GateKind kind) {
  check_belief(belief);
  switch (kind) {
    case GateKind::entropy:
    case GateKind::entropy_reversed: {
      double h = 0.0;
      for (double p : belief) {
        if (p > 0.0) h -= p * std::log(p);
      }
      return h;
    }
    case GateKind::max:
    case GateKind::max_reversed: {
      double mx = 0.0;
      for (double p : belief) mx = std::max(mx, p);
      return 1.0 - mx;
    }
  }
  throw Error("uncertainty: unknown kind");
}

TokenId argmax_token(const Belief& belief) {
  check_belief(belief);
  std::size_t best = 0;
  for (std::size_t i = 1; i < belief.size(); ++i) {
    if (belief[i] > belief[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

TokenId argmax_logit(const LogitVector& logits) {
  if (logits.empty()) throw ShapeError("argmax: empty logits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

NaturalSequence generate_natural(const LanguageModel& model, std::span<const TokenId> prompt,
                                 const GenerationParams& params, CountingRng& rng) {
  if (prompt.empty()) throw GenerationError("generate: empty prompt");
  const auto max_len = static_cast<std::size_t>(model.max_seq_len());
  const TokenId eos = model.vocab().eos_id();
  const EmbeddingTable& table = model.embeddings();

  std::vector<TokenId> history(prompt.begin(), prompt.end());
  NaturalSequence out;
  for (int step = 0; step < params.max_new; ++step) {
    if (history.size() > max_len) {
      throw ContextOverflowError(
          "generate: context length " + std::to_string(history.size()) + " exceeds max_seq_len " +
              std::to_string(max_len) + " after " + std::to_string(step) + " tokens",
          static_cast<std::size_t>(step));
    }
    const Belief b = belief(model.forward_logits(embed_tokens(history, table)), params.temperature);
    const TokenId next = sample_token(b, rng);
    if (next == eos) {
      out.stop_reason = StopReason::eos_sampled;
      return out;
    }
    out.ids.push_back(next);
    history.push_back(next);
  }
  out.stop_reason = StopReason::length_limit;
  return out;
}

CipherSequence generate_cipher(const LanguageModel& model, const EmbeddingSeq& prompt,
                               const GenerationParams& params) {
  const EmbeddingTable& table = model.embeddings();
  EmbeddingStepping loop{model, params, table};
  return loop.run(prompt, [&](const Belief& b) { return cipher_step(b, table); });
}

CipherSequence generate_partial_cipher(const LanguageModel& model, const EmbeddingSeq& prompt,
                                       const GenerationParams& params) {
  if (!params.gate.has_value()) {
    throw ConfigError("generate_partial_cipher: missing uncertainty gate");
  }
  const UncertaintyGate gate = *params.gate;
  const EmbeddingTable& table = model.embeddings();
  EmbeddingStepping loop{model, params, table};
  return loop.run(prompt, [&](const Belief& b) -> std::vector<float> {
    if (gate.fires(uncertainty(b, gate.kind))) return cipher_step(b, table);
    const auto row = table.row(argmax_token(b));
    return std::vector<float>(row.begin(), row.end());
  });
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::eos_nearest: return "eos_nearest";
    case StopReason::eos_sampled: return "eos_sampled";
    case StopReason::length_limit: return "length_limit";
  }
  return "unknown";
}

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::natural: return "natural";
    case Mode::cipher: return "cipher";
    case Mode::partial: return "partial";
  }
  return "unknown";
}

const char* to_string(GateKind kind) {
  switch (kind) {
    case GateKind::entropy: return "entropy";
    case GateKind::max: return "max";
    case GateKind::entropy_reversed: return "entropy_reversed";
    case GateKind::max_reversed: return "max_reversed";
  }
  return "unknown";
}

std::optional<Mode> mode_from_string(std::string_view name) {
  if (name == "natural") return Mode::natural;
  if (name == "cipher") return Mode::cipher;
  if (name == "partial") return Mode::partial;
  return std::nullopt;
}

std::optional<GateKind> gate_kind_from_string(std::string_view name) {
  if (name == "entropy") return GateKind::entropy;
  if (name == "max") return GateKind::max;
  if (name == "entropy_reversed") return GateKind::entropy_reversed;
  if (name == "max_reversed") return GateKind::max_reversed;
  return std::nullopt;
}

}  // namespace cipher::decoding
