#include "cipher/vocabulary.hpp"

#include <fstream>
#include <sstream>

namespace cipher {

namespace {

void check_special(const char* name, TokenId id, int vocab_size, bool required) {
  if (id < 0) {
    if (required) throw ConfigError(std::string("vocabulary: missing required special token '") + name + "'");
    return;
  }
  if (id >= vocab_size) {
    throw ConfigError(std::string("vocabulary: special token '") + name + "' id " + std::to_string(id) +
                      " out of range [0, " + std::to_string(vocab_size) + ")");
  }
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens, SpecialIds special)
    : tokens_(std::move(tokens)), special_(special) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) {
      throw ConfigError("vocabulary: empty token string at id " + std::to_string(i));
    }
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw ConfigError("vocabulary: duplicate token '" + tokens_[i] + "' at ids " +
                        std::to_string(it->second) + " and " + std::to_string(i));
    }
    max_token_length_ = std::max(max_token_length_, tokens_[i].size());
  }
  check_special("eos", special_.eos, size(), /*required=*/true);
  check_special("bos", special_.bos, size(), /*required=*/false);
  check_special("pad", special_.pad, size(), /*required=*/false);
}

const std::string& Vocabulary::token(TokenId id) const {
  if (!contains(id)) {
    throw ConfigError("vocabulary: token id " + std::to_string(id) + " out of range [0, " +
                      std::to_string(size()) + ")");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<TokenId> Vocabulary::tokenize(std::string_view text) const {
  std::vector<TokenId> ids;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t limit = std::min(max_token_length_, text.size() - pos);
    TokenId best = -1;
    std::size_t best_len = 0;
    for (std::size_t len = limit; len >= 1; --len) {
      auto it = index_.find(std::string(text.substr(pos, len)));
      if (it != index_.end()) {
        best = it->second;
        best_len = len;
        break;
      }
    }
    if (best < 0) {
      throw TokenizeError("tokenize: no vocabulary token matches input at byte " + std::to_string(pos) +
                          " ('" + std::string(text.substr(pos, 1)) + "')");
    }
    ids.push_back(best);
    pos += best_len;
  }
  return ids;
}

std::string Vocabulary::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) out += token(id);
  return out;
}

bool Vocabulary::same_tokens(const Vocabulary& other) const {
  return tokens_ == other.tokens_ && special_.bos == other.special_.bos &&
         special_.eos == other.special_.eos && special_.pad == other.special_.pad;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("vocabulary: cannot open " + path.string());

  SpecialIds special;
  std::vector<std::string> tokens;
  std::string line;
  bool in_header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (in_header && !line.empty() && line[0] == '#') {
      std::istringstream header(line.substr(1));
      std::string field;
      while (header >> field) {
        auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq);
        const TokenId value = static_cast<TokenId>(std::stol(field.substr(eq + 1)));
        if (key == "bos") special.bos = value;
        else if (key == "eos") special.eos = value;
        else if (key == "pad") special.pad = value;
      }
      continue;
    }
    in_header = false;
    tokens.push_back(line);
  }
  // A trailing newline produces one phantom empty line; drop it.
  if (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
  return Vocabulary(std::move(tokens), special);
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("vocabulary: cannot write " + path.string());
  out << "#";
  if (special_.bos >= 0) out << " bos=" << special_.bos;
  out << " eos=" << special_.eos;
  if (special_.pad >= 0) out << " pad=" << special_.pad;
  out << "\n";
  for (const auto& t : tokens_) out << t << "\n";
  if (!out) throw IoError("vocabulary: write failed for " + path.string());
}

}  // namespace cipher
