#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cipher/decoding.hpp"
#include "cipher/model.hpp"
#include "cipher/tasks.hpp"

namespace cipher::debate {

enum class Role { standard, expert, random, misaligned };

/// Order of the previous round's responses inside a debater's context.
/// others_first feeds the peers' responses first and the debater's own
/// response last; self_first is the swapped variant.
enum class Ordering { others_first, self_first };

enum class Aggregation { lowest_temperature, majority_vote, random_tiebreak };

struct DebaterSpec {
  std::shared_ptr<const LanguageModel> model;  // may be null for expert/misaligned roles
  double temperature = 1.0;
  decoding::Mode mode = decoding::Mode::cipher;
  std::optional<decoding::UncertaintyGate> gate;
  Role role = Role::standard;
  int max_new = 64;
  decoding::Metric metric = decoding::Metric::squared_euclidean;
  /// Effective generation temperature for the random role ("extremely high").
  double random_role_temperature = 100.0;
};

/// {question} renders into both round templates; {responses} marks where the
/// previous round's response blocks go in the debate template; {answer}
/// renders scripted ground-truth responses for the expert and misaligned
/// roles. After instantiation no marker may remain.
struct PromptTemplate {
  std::string initial;
  std::string debate;
  std::string answer;

  static PromptTemplate defaults();
  void validate() const;
};

struct DebateConfig {
  std::vector<DebaterSpec> debaters;
  int rounds = 2;
  Ordering ordering = Ordering::others_first;
  Aggregation aggregation = Aggregation::lowest_temperature;
  PromptTemplate templates = PromptTemplate::defaults();
  /// Separator text embedded between response blocks; may be empty.
  std::string separator = "\n";
  std::uint64_t seed = 0;

  void validate() const;
};

struct ResponseRecord {
  int round = 0;    // 1-based
  int debater = 0;  // 0-based position index
  decoding::Mode mode = decoding::Mode::cipher;
  Role role = Role::standard;
  double temperature = 0.0;  // effective generation temperature
  std::vector<TokenId> token_ids;  // sampled ids, or nearest-neighbor decode of vectors
  EmbeddingSeq vectors;            // raw response vectors; empty in natural mode
  std::string decoded_text;
  std::optional<std::string> extracted_answer;
  decoding::StopReason stop_reason = decoding::StopReason::length_limit;
  std::size_t context_length = 0;   // positions fed to the model
  std::size_t scaffold_length = 0;  // template text + separators within the context
  std::string embedding_digest;     // hash of the response's embedding bytes
};

struct AggregationResult {
  std::optional<std::string> answer;
  std::string trace;
};

struct DebateTranscript {
  int debater_count = 0;
  int rounds = 0;
  std::vector<ResponseRecord> records;  // round-major, rounds x debaters
  std::optional<std::string> final_answer;
  std::string aggregation_trace;
  Ordering ordering = Ordering::others_first;
  std::uint64_t generation_rng_draws = 0;  // zero for cipher/partial debates
  std::uint64_t total_rng_draws = 0;       // generation plus aggregation tie-breaks

  const ResponseRecord& record(int round, int debater) const;  // round 1-based
  std::vector<const ResponseRecord*> final_round() const;
};

struct AssembledContext {
  std::vector<TokenId> ids;  // token path (always filled)
  EmbeddingSeq vectors;      // embedding path; empty for natural-mode debaters
  std::size_t scaffold_length = 0;

  std::size_t length() const { return vectors.empty() ? ids.size() : vectors.size(); }
};

/// Context for one debater at one round: the rendered prompt for round 1, or
/// the debate template wrapped around the previous round's responses in the
/// configured order. Embedding-mode debaters receive peers' raw vectors
/// verbatim; token-mode debaters receive their decoded ids.
AssembledContext assemble_context(const DebateConfig& config, const eval::TaskInstance& task,
                                  int debater, int round,
                                  std::span<const ResponseRecord> previous_round);

/// Runs the initial round plus rounds-1 refinement rounds. Debaters within a
/// round see only the previous round's responses. `batch` supplies the
/// misaligned role's foreign ground truths and must hold at least two tasks
/// when that role is present.
DebateTranscript run_debate(const DebateConfig& config, const eval::TaskInstance& task,
                            std::span<const eval::TaskInstance> batch = {});

/// Final-answer selection. lowest_temperature picks the coolest debater's
/// answer (ties to the lowest position); majority_vote picks the modal
/// answer with a seeded uniform tie-break; random_tiebreak picks uniformly
/// among all extracted answers. Total: always yields an answer or an
/// explicit absent marker.
AggregationResult aggregate(std::span<const ResponseRecord* const> final_round,
                            Aggregation strategy, CountingRng& rng);

const char* to_string(Role role);
const char* to_string(Ordering ordering);
const char* to_string(Aggregation aggregation);
std::optional<Role> role_from_string(std::string_view name);
std::optional<Ordering> ordering_from_string(std::string_view name);
std::optional<Aggregation> aggregation_from_string(std::string_view name);

}  // namespace cipher::debate
