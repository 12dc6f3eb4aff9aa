#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cipher/common.hpp"

namespace cipher {

/// Special token ids. eos is mandatory; bos and pad are optional (-1 when absent).
struct SpecialIds {
  TokenId bos = -1;
  TokenId eos = -1;
  TokenId pad = -1;
};

/// Dense id -> token-string bijection over V distinct tokens.
///
/// Text is segmented by greedy longest match against the token list, so the
/// vocabulary doubles as the (deliberately simple) tokenizer: token lists are
/// given, never induced.
class Vocabulary {
public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, SpecialIds special);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  bool contains(TokenId id) const { return id >= 0 && id < size(); }

  TokenId bos_id() const { return special_.bos; }
  TokenId eos_id() const { return special_.eos; }
  TokenId pad_id() const { return special_.pad; }

  /// Greedy longest-match segmentation. Throws TokenizeError when no token
  /// matches at some position, naming the offending byte offset.
  std::vector<TokenId> tokenize(std::string_view text) const;

  /// Plain concatenation of token strings.
  std::string detokenize(std::span<const TokenId> ids) const;

  /// Same token list and special ids.
  bool same_tokens(const Vocabulary& other) const;

  /// One token per line; a leading block of '#' lines declares special ids
  /// (e.g. "# eos=1"). The first non-'#' line is token id 0.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  SpecialIds special_;
  std::size_t max_token_length_ = 0;
};

}  // namespace cipher
