#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace kidlab {

// Reserved token ids. MASK is never produced by SQL rendering; it exists for
// the imperfect-data pipeline.
enum SpecialToken : int { kPadId = 0, kBosId = 1, kEosId = 2, kMaskId = 3 };

enum class SeqRole { Prompt, Output };

constexpr int kMaxOutputTokens = 64;
constexpr int kMaxPromptTokens = 192;

struct TokenSequence {
  std::vector<int> ids;
  SeqRole role = SeqRole::Output;

  int size() const { return int(ids.size()); }
  bool empty() const { return ids.empty(); }
  int operator[](int i) const { return ids[size_t(i)]; }
};

struct UnknownTokenError : std::runtime_error {
  explicit UnknownTokenError(const std::string& surface)
      : std::runtime_error("unknown token: '" + surface + "'"),
        surface(surface) {}
  std::string surface;
};

struct SequenceTooLongError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Word-level vocabulary over the closed grammar. Immutable after
// construction; freely shared between threads.
class Vocabulary {
 public:
  // The fixed vocabulary covering rendered SQL, schema prompts and question
  // templates. Identical across worlds.
  static const Vocabulary& standard();

  explicit Vocabulary(std::vector<std::string> id_to_token);

  int size() const { return int(id_to_token_.size()); }
  const std::string& token(int id) const { return id_to_token_.at(size_t(id)); }
  bool contains(const std::string& tok) const {
    return token_to_id_.count(tok) > 0;
  }
  // Throws UnknownTokenError if absent.
  int id(const std::string& tok) const;

  // Splits text into grammar tokens: whitespace-separated words, with
  // "(" ")" "," peeled off as their own tokens so compact SQL like
  // "COUNT(c1)" round-trips.
  static std::vector<std::string> split_text(const std::string& text);

  // Inverse of split_text on canonical text: joins with single spaces,
  // except no space after "(" and none before ")" or ",".
  static std::string join_tokens(const std::vector<std::string>& tokens);

  // Appends EOS. Throws UnknownTokenError / SequenceTooLongError.
  TokenSequence encode(const std::string& text,
                       SeqRole role = SeqRole::Output) const;

  // Stops at the first EOS; MASK renders as "<mask>", out-of-range ids as
  // "<unk-N>". Never throws.
  std::string decode(std::span<const int> ids) const;
  std::string decode(const TokenSequence& seq) const {
    return decode(std::span<const int>(seq.ids));
  }

  const std::vector<std::string>& tokens() const { return id_to_token_; }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace kidlab
