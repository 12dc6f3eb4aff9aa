#include "cipher/debate.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace cipher::debate {

namespace {

// Stream tags keep generation, aggregation and misaligned-answer draws on
// disjoint RNG streams derived from (seed, round, debater).
constexpr std::uint64_t kGenStream = 0x67656e;
constexpr std::uint64_t kAggStream = 0x616767;
constexpr std::uint64_t kMisalignedStream = 0x6d6973;

std::string render(std::string text, std::string_view marker, std::string_view value) {
  const std::string needle = std::string("{") + std::string(marker) + "}";
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

void check_resolved(const std::string& text, const char* what) {
  for (const char* marker : {"{question}", "{responses}", "{answer}"}) {
    if (text.find(marker) != std::string::npos) {
      throw ConfigError(std::string("template: unresolved marker ") + marker + " in " + what);
    }
  }
}

const LanguageModel& reference_model(const DebateConfig& config) {
  for (const auto& spec : config.debaters) {
    if (spec.model) return *spec.model;
  }
  throw ConfigError("debate: at least one debater must reference a model");
}

const LanguageModel& debater_model(const DebateConfig& config, int debater) {
  const auto& spec = config.debaters[static_cast<std::size_t>(debater)];
  return spec.model ? *spec.model : reference_model(config);
}

bool debate_uses_embeddings(const DebateConfig& config) {
  return std::any_of(config.debaters.begin(), config.debaters.end(), [](const DebaterSpec& d) {
    return d.mode != decoding::Mode::natural;
  });
}

std::string digest_of(const EmbeddingSeq& vectors) {
  const auto& flat = vectors.flat();
  return digest_hex(fnv1a64(flat.data(), flat.size() * sizeof(float)));
}

std::vector<int> block_order(Ordering ordering, int debater, int n) {
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  if (ordering == Ordering::self_first) order.push_back(debater);
  for (int j = 0; j < n; ++j) {
    if (j != debater) order.push_back(j);
  }
  if (ordering == Ordering::others_first) order.push_back(debater);
  return order;
}

ResponseRecord scripted_response(const DebateConfig& config, const eval::TaskInstance& task,
                                 std::span<const eval::TaskInstance> batch, int debater, int round,
                                 std::uint64_t* total_draws) {
  const auto& spec = config.debaters[static_cast<std::size_t>(debater)];
  const LanguageModel& ref = reference_model(config);

  std::string answer_text;
  if (spec.role == Role::expert) {
    answer_text = task.answer;
  } else {  // misaligned: another task's ground truth, never its own
    if (batch.size() < 2) {
      throw ConfigError("debate: misaligned role requires a task batch of at least 2");
    }
    std::vector<std::size_t> candidates;
    for (std::size_t idx = 0; idx < batch.size(); ++idx) {
      if (batch[idx].id != task.id) candidates.push_back(idx);
    }
    if (candidates.empty()) {
      throw ConfigError("debate: misaligned role found no foreign task in the batch");
    }
    CountingRng rng(mix_seed({config.seed, static_cast<std::uint64_t>(round),
                              static_cast<std::uint64_t>(debater), kMisalignedStream}));
    answer_text = batch[candidates[rng.next_below(candidates.size())]].answer;
    *total_draws += rng.draws();
  }

  const std::string rendered = render(config.templates.answer, "answer", answer_text);
  check_resolved(rendered, "answer template");

  ResponseRecord rec;
  rec.round = round;
  rec.debater = debater;
  rec.mode = spec.mode;
  rec.role = spec.role;
  rec.temperature = spec.temperature;
  rec.token_ids = ref.vocab().tokenize(rendered);
  rec.decoded_text = rendered;
  if (spec.mode != decoding::Mode::natural) {
    rec.vectors = embed_tokens(rec.token_ids, ref.embeddings());
    rec.stop_reason = decoding::StopReason::eos_nearest;
  } else {
    rec.stop_reason = decoding::StopReason::eos_sampled;
  }
  rec.embedding_digest = digest_of(embed_tokens(rec.token_ids, ref.embeddings()));
  return rec;
}

ResponseRecord generated_response(const DebateConfig& config, const eval::TaskInstance& task,
                                  int debater, int round,
                                  std::span<const ResponseRecord> previous_round,
                                  std::uint64_t* generation_draws) {
  const auto& spec = config.debaters[static_cast<std::size_t>(debater)];
  const LanguageModel& model = *spec.model;

  AssembledContext ctx = assemble_context(config, task, debater, round, previous_round);
  if (ctx.length() > static_cast<std::size_t>(model.max_seq_len())) {
    throw ContextOverflowError("debate: round " + std::to_string(round) + ", debater " +
                                   std::to_string(debater + 1) + ": context length " +
                                   std::to_string(ctx.length()) + " exceeds max_seq_len " +
                                   std::to_string(model.max_seq_len()),
                               0);
  }

  decoding::GenerationParams params;
  params.temperature = spec.role == Role::random ? spec.random_role_temperature : spec.temperature;
  params.max_new = spec.max_new;
  params.mode = spec.mode;
  params.gate = spec.gate;
  params.metric = spec.metric;
  params.validate();

  ResponseRecord rec;
  rec.round = round;
  rec.debater = debater;
  rec.mode = spec.mode;
  rec.role = spec.role;
  rec.temperature = params.temperature;
  rec.context_length = ctx.length();
  rec.scaffold_length = ctx.scaffold_length;

  if (spec.mode == decoding::Mode::natural) {
    CountingRng rng(mix_seed({config.seed, static_cast<std::uint64_t>(round),
                              static_cast<std::uint64_t>(debater), kGenStream}));
    const auto result = decoding::generate_natural(model, ctx.ids, params, rng);
    *generation_draws += rng.draws();
    rec.token_ids = result.ids;
    rec.stop_reason = result.stop_reason;
    rec.embedding_digest = digest_of(embed_tokens(rec.token_ids, model.embeddings()));
  } else {
    const auto result = spec.mode == decoding::Mode::cipher
                            ? decoding::generate_cipher(model, ctx.vectors, params)
                            : decoding::generate_partial_cipher(model, ctx.vectors, params);
    rec.vectors = result.vectors;
    rec.stop_reason = result.stop_reason;
    rec.token_ids = decoding::nn_decode_seq(rec.vectors, model.embeddings(), spec.metric);
    rec.embedding_digest = digest_of(rec.vectors);
  }
  rec.decoded_text = model.vocab().detokenize(rec.token_ids);
  return rec;
}

}  // namespace

PromptTemplate PromptTemplate::defaults() {
  PromptTemplate t;
  t.initial =
      "Q: {question}\nThink step by step, then state the final answer.\nA:";
  t.debate =
      "Q: {question}\nSolutions proposed by the debaters last round:\n{responses}\n"
      "Use them to refine your solution, then state the final answer.\nA:";
  t.answer = "The answer is {answer}.";
  return t;
}

void PromptTemplate::validate() const {
  if (initial.find("{question}") == std::string::npos) {
    throw ConfigError("template: initial template must contain {question}");
  }
  if (initial.find("{responses}") != std::string::npos) {
    throw ConfigError("template: initial template must not contain {responses}");
  }
  const auto first = debate.find("{responses}");
  if (first == std::string::npos || debate.find("{responses}", first + 1) != std::string::npos) {
    throw ConfigError("template: debate template must contain exactly one {responses}");
  }
  if (answer.find("{answer}") == std::string::npos) {
    throw ConfigError("template: answer template must contain {answer}");
  }
}

void DebateConfig::validate() const {
  if (debaters.empty()) throw ConfigError("debate config: at least one debater required");
  if (rounds < 1) throw ConfigError("debate config: rounds must be >= 1");
  templates.validate();
  bool any_model = false;
  for (std::size_t i = 0; i < debaters.size(); ++i) {
    const auto& d = debaters[i];
    if (!(d.temperature > 0.0)) {
      throw ConfigError("debate config: debater " + std::to_string(i + 1) + ": temperature must be > 0");
    }
    if (d.max_new < 1) {
      throw ConfigError("debate config: debater " + std::to_string(i + 1) + ": max_new must be >= 1");
    }
    const bool generates = d.role == Role::standard || d.role == Role::random;
    if (generates && !d.model) {
      throw ConfigError("debate config: debater " + std::to_string(i + 1) + ": role '" +
                        to_string(d.role) + "' requires a model");
    }
    // Scripted roles never run the generator, so the gate is only demanded
    // where it would actually fire.
    if (generates && d.mode == decoding::Mode::partial && !d.gate.has_value()) {
      throw ConfigError("debate config: debater " + std::to_string(i + 1) +
                        ": partial mode requires a gate");
    }
    any_model = any_model || d.model != nullptr;
  }
  if (!any_model) throw ConfigError("debate config: at least one debater must reference a model");

  // Contexts mix template text with peer responses, so every model must read
  // the same vocabulary, and raw vectors may only flow between identical
  // embedding tables.
  const LanguageModel& ref = reference_model(*this);
  const bool embeddings_flow = debate_uses_embeddings(*this);
  for (std::size_t i = 0; i < debaters.size(); ++i) {
    if (!debaters[i].model) continue;
    const LanguageModel& m = *debaters[i].model;
    if (!m.vocab().same_tokens(ref.vocab())) {
      throw ConfigError("debate config: debater " + std::to_string(i + 1) +
                        ": vocabulary differs from debater 1's");
    }
    if (embeddings_flow && !m.embeddings().same_rows(ref.embeddings())) {
      throw ConfigError("debate config: debater " + std::to_string(i + 1) +
                        ": embedding table differs; embedding-space debate requires one shared table");
    }
  }
}

const ResponseRecord& DebateTranscript::record(int round, int debater) const {
  const auto idx = static_cast<std::size_t>(round - 1) * static_cast<std::size_t>(debater_count) +
                   static_cast<std::size_t>(debater);
  if (round < 1 || round > rounds || debater < 0 || debater >= debater_count || idx >= records.size()) {
    throw ConfigError("transcript: no record for round " + std::to_string(round) + ", debater " +
                      std::to_string(debater));
  }
  return records[idx];
}

std::vector<const ResponseRecord*> DebateTranscript::final_round() const {
  std::vector<const ResponseRecord*> out;
  const std::size_t n = static_cast<std::size_t>(debater_count);
  if (n == 0 || records.size() < n) return out;
  for (std::size_t i = records.size() - n; i < records.size(); ++i) out.push_back(&records[i]);
  return out;
}

AssembledContext assemble_context(const DebateConfig& config, const eval::TaskInstance& task,
                                  int debater, int round,
                                  std::span<const ResponseRecord> previous_round) {
  const auto& spec = config.debaters[static_cast<std::size_t>(debater)];
  const LanguageModel& model = debater_model(config, debater);
  const Vocabulary& vocab = model.vocab();
  const EmbeddingTable& table = model.embeddings();
  const bool wants_vectors = spec.mode != decoding::Mode::natural;

  AssembledContext ctx;
  if (round <= 1) {
    const std::string prompt = render(config.templates.initial, "question", task.question);
    check_resolved(prompt, "initial template");
    ctx.ids = vocab.tokenize(prompt);
    ctx.scaffold_length = ctx.ids.size();
    if (wants_vectors) ctx.vectors = embed_tokens(ctx.ids, table);
    return ctx;
  }

  const int n = static_cast<int>(config.debaters.size());
  if (static_cast<int>(previous_round.size()) != n) {
    throw ConfigError("assemble_context: previous round has " +
                      std::to_string(previous_round.size()) + " records, expected " +
                      std::to_string(n));
  }

  // Split at the marker before rendering the question, so question text can
  // never masquerade as the responses slot.
  const auto split = config.templates.debate.find("{responses}");
  const std::string pre =
      render(config.templates.debate.substr(0, split), "question", task.question);
  const std::string post = render(
      config.templates.debate.substr(split + std::string("{responses}").size()), "question",
      task.question);
  check_resolved(pre, "debate template");
  check_resolved(post, "debate template");

  const std::vector<TokenId> pre_ids = vocab.tokenize(pre);
  const std::vector<TokenId> post_ids = post.empty() ? std::vector<TokenId>{} : vocab.tokenize(post);
  const std::vector<TokenId> sep_ids =
      config.separator.empty() ? std::vector<TokenId>{} : vocab.tokenize(config.separator);

  ctx.ids = pre_ids;
  if (wants_vectors) ctx.vectors = embed_tokens(pre_ids, table);
  ctx.scaffold_length = pre_ids.size() + post_ids.size();

  const std::vector<int> order = block_order(config.ordering, debater, n);
  for (std::size_t b = 0; b < order.size(); ++b) {
    if (b > 0 && !sep_ids.empty()) {
      ctx.ids.insert(ctx.ids.end(), sep_ids.begin(), sep_ids.end());
      if (wants_vectors) ctx.vectors.append(embed_tokens(sep_ids, table));
      ctx.scaffold_length += sep_ids.size();
    }
    const ResponseRecord& block = previous_round[static_cast<std::size_t>(order[b])];
    ctx.ids.insert(ctx.ids.end(), block.token_ids.begin(), block.token_ids.end());
    if (wants_vectors) {
      // Peer vectors pass through verbatim; token-mode responses are embedded
      // as exact rows.
      if (block.mode != decoding::Mode::natural) {
        ctx.vectors.append(block.vectors);
      } else {
        ctx.vectors.append(embed_tokens(block.token_ids, table));
      }
    }
  }
  ctx.ids.insert(ctx.ids.end(), post_ids.begin(), post_ids.end());
  if (wants_vectors) ctx.vectors.append(embed_tokens(post_ids, table));
  return ctx;
}

DebateTranscript run_debate(const DebateConfig& config, const eval::TaskInstance& task,
                            std::span<const eval::TaskInstance> batch) {
  config.validate();
  task.validate();

  DebateTranscript transcript;
  transcript.debater_count = static_cast<int>(config.debaters.size());
  transcript.rounds = config.rounds;
  transcript.ordering = config.ordering;

  std::vector<ResponseRecord> previous;
  for (int round = 1; round <= config.rounds; ++round) {
    std::vector<ResponseRecord> current;
    current.reserve(config.debaters.size());
    for (int i = 0; i < transcript.debater_count; ++i) {
      const auto& spec = config.debaters[static_cast<std::size_t>(i)];
      try {
        ResponseRecord rec =
            (spec.role == Role::expert || spec.role == Role::misaligned)
                ? scripted_response(config, task, batch, i, round, &transcript.total_rng_draws)
                : generated_response(config, task, i, round, previous,
                                     &transcript.generation_rng_draws);
        rec.extracted_answer = eval::extract_answer(rec.decoded_text, task.pattern);
        current.push_back(std::move(rec));
      } catch (const ContextOverflowError&) {
        throw;  // already names round and debater or carries step counts
      } catch (const GenerationError& e) {
        throw GenerationError("debate: round " + std::to_string(round) + ", debater " +
                              std::to_string(i + 1) + ": " + e.what());
      }
    }
    for (auto& rec : current) transcript.records.push_back(std::move(rec));
    previous.assign(transcript.records.end() - transcript.debater_count, transcript.records.end());
  }

  CountingRng agg_rng(mix_seed({config.seed, kAggStream}));
  const auto final_records = transcript.final_round();
  const AggregationResult result = aggregate(final_records, config.aggregation, agg_rng);
  transcript.final_answer = result.answer;
  transcript.aggregation_trace = result.trace;
  transcript.total_rng_draws += transcript.generation_rng_draws + agg_rng.draws();
  return transcript;
}

AggregationResult aggregate(std::span<const ResponseRecord* const> final_round,
                            Aggregation strategy, CountingRng& rng) {
  AggregationResult out;
  if (final_round.empty()) {
    out.trace = "aggregate: empty final round";
    return out;
  }

  switch (strategy) {
    case Aggregation::lowest_temperature: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < final_round.size(); ++i) {
        if (final_round[i]->temperature < final_round[best]->temperature) best = i;
      }
      const auto& rec = *final_round[best];
      std::ostringstream trace;
      trace << "lowest_temperature: debater " << (rec.debater + 1) << " (T=" << rec.temperature << ")";
      if (rec.extracted_answer.has_value()) {
        out.answer = eval::canonical_answer(*rec.extracted_answer);
        trace << " -> " << *out.answer;
      } else {
        trace << " -> no extractable answer";
      }
      out.trace = trace.str();
      return out;
    }
    case Aggregation::majority_vote: {
      std::map<std::string, int> counts;
      for (const auto* rec : final_round) {
        if (rec->extracted_answer.has_value()) {
          ++counts[eval::canonical_answer(*rec->extracted_answer)];
        }
      }
      if (counts.empty()) {
        out.trace = "majority_vote: no extractable answers";
        return out;
      }
      int top = 0;
      for (const auto& [answer, count] : counts) top = std::max(top, count);
      std::vector<std::string> modal;  // std::map iteration is already sorted
      for (const auto& [answer, count] : counts) {
        if (count == top) modal.push_back(answer);
      }
      std::ostringstream trace;
      if (modal.size() == 1) {
        out.answer = modal.front();
        trace << "majority_vote: " << *out.answer << " (" << top << " votes)";
      } else {
        const std::size_t pick = static_cast<std::size_t>(rng.next_below(modal.size()));
        out.answer = modal[pick];
        trace << "majority_vote: tie among " << modal.size() << " answers, picked " << *out.answer;
      }
      out.trace = trace.str();
      return out;
    }
    case Aggregation::random_tiebreak: {
      std::vector<std::string> answers;
      for (const auto* rec : final_round) {
        if (rec->extracted_answer.has_value()) {
          answers.push_back(eval::canonical_answer(*rec->extracted_answer));
        }
      }
      if (answers.empty()) {
        out.trace = "random_tiebreak: no extractable answers";
        return out;
      }
      const std::size_t pick = static_cast<std::size_t>(rng.next_below(answers.size()));
      out.answer = answers[pick];
      out.trace = "random_tiebreak: picked " + *out.answer + " of " + std::to_string(answers.size());
      return out;
    }
  }
  throw Error("aggregate: unknown strategy");
}

const char* to_string(Role role) {
  switch (role) {
    case Role::standard: return "standard";
    case Role::expert: return "expert";
    case Role::random: return "random";
    case Role::misaligned: return "misaligned";
  }
  return "unknown";
}

const char* to_string(Ordering ordering) {
  return ordering == Ordering::others_first ? "others_first" : "self_first";
}

const char* to_string(Aggregation aggregation) {
  switch (aggregation) {
    case Aggregation::lowest_temperature: return "lowest_temperature";
    case Aggregation::majority_vote: return "majority_vote";
    case Aggregation::random_tiebreak: return "random_tiebreak";
  }
  return "unknown";
}

std::optional<Role> role_from_string(std::string_view name) {
  if (name == "standard") return Role::standard;
  if (name == "expert") return Role::expert;
  if (name == "random") return Role::random;
  if (name == "misaligned") return Role::misaligned;
  return std::nullopt;
}

std::optional<Ordering> ordering_from_string(std::string_view name) {
  if (name == "others_first") return Ordering::others_first;
  if (name == "self_first") return Ordering::self_first;
  return std::nullopt;
}

std::optional<Aggregation> aggregation_from_string(std::string_view name) {
  if (name == "lowest_temperature") return Aggregation::lowest_temperature;
  if (name == "majority_vote") return Aggregation::majority_vote;
  if (name == "random_tiebreak") return Aggregation::random_tiebreak;
  return std::nullopt;
}

}  // namespace cipher::debate
