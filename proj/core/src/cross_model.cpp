#include "cipher/cross_model.hpp"

#include "cipher/model_io.hpp"

namespace cipher::xmodel {

void DualEmbeddingMap::validate() const {
  if (table_a.vocab_size() != vocab.size() || table_b.vocab_size() != vocab.size()) {
    throw ShapeError("dual map: table rows (" + std::to_string(table_a.vocab_size()) + ", " +
                     std::to_string(table_b.vocab_size()) + ") != vocabulary size " +
                     std::to_string(vocab.size()));
  }
}

DualCipherResult generate_cipher_dual(const LanguageModel& sender, const EmbeddingSeq& prompt,
                                      const decoding::GenerationParams& params,
                                      const DualEmbeddingMap& map, Side receiver) {
  map.validate();
  const EmbeddingTable& sender_table = sender.embeddings();
  if (!sender_table.same_rows(map.table_a) && !sender_table.same_rows(map.table_b)) {
    throw ConfigError("generate_cipher_dual: sender's embedding table is not a side of the map");
  }
  const EmbeddingTable& receiver_table = map.table(receiver);
  if (prompt.empty()) throw GenerationError("generate_cipher_dual: empty prompt context");
  if (prompt.dim() != sender_table.dim()) {
    throw ShapeError("generate_cipher_dual: prompt dim != sender embedding dim");
  }

  const auto max_len = static_cast<std::size_t>(sender.max_seq_len());
  const TokenId eos = sender.vocab().eos_id();

  EmbeddingSeq context(prompt.dim());
  context.append(prompt);

  DualCipherResult out;
  out.self_sequence.vectors = EmbeddingSeq(sender_table.dim());
  out.message.vectors = EmbeddingSeq(receiver_table.dim());
  for (int step = 0; step < params.max_new; ++step) {
    if (context.size() > max_len) {
      throw ContextOverflowError("generate_cipher_dual: context length " +
                                     std::to_string(context.size()) + " exceeds max_seq_len " +
                                     std::to_string(max_len),
                                 static_cast<std::size_t>(step));
    }
    // One belief per step feeds both averages.
    const decoding::Belief b = decoding::belief(sender.forward_logits(context), params.temperature);
    const std::vector<float> self_vec = decoding::cipher_step(b, sender_table);
    const std::vector<float> message_vec = decoding::cipher_step(b, receiver_table);
    if (decoding::nn_decode(self_vec, sender_table, params.metric) == eos) {
      out.self_sequence.stop_reason = decoding::StopReason::eos_nearest;
      out.message.stop_reason = decoding::StopReason::eos_nearest;
      return out;
    }
    out.self_sequence.vectors.append(self_vec);
    out.message.vectors.append(message_vec);
    context.append(self_vec);
  }
  out.self_sequence.stop_reason = decoding::StopReason::length_limit;
  out.message.stop_reason = decoding::StopReason::length_limit;
  return out;
}

std::vector<TokenId> receiver_decode(const decoding::CipherSequence& message,
                                     const DualEmbeddingMap& map, Side receiver,
                                     decoding::Metric metric) {
  const EmbeddingTable& table = map.table(receiver);
  if (!message.vectors.empty() && message.vectors.dim() != table.dim()) {
    throw ShapeError("receiver_decode: message dim " + std::to_string(message.vectors.dim()) +
                     " != receiver table dim " + std::to_string(table.dim()));
  }
  return decoding::nn_decode_seq(message.vectors, table, metric);
}

DualEmbeddingMap load_dual_map(const std::filesystem::path& vocab_path,
                               const std::filesystem::path& table_a_path,
                               const std::filesystem::path& table_b_path) {
  DualEmbeddingMap map;
  map.vocab = Vocabulary::load(vocab_path);
  map.table_a = load_table(table_a_path);
  map.table_b = load_table(table_b_path);
  map.validate();
  return map;
}

}  // namespace cipher::xmodel
