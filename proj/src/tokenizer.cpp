#include "kidlab/tokenizer.hpp"

#include <fstream>
#include <set>

#include "json.hpp"
#include "kidlab/grammar_pool.hpp"

namespace kidlab {

namespace {

const char* const kReserved[] = {"<pad>", "<bos>", "<eos>", "<mask>"};

const char* const kSqlKeywords[] = {
    "SELECT", "FROM", "WHERE", "JOIN",  "ON",  "AND",   "ORDER", "BY",
    "ASC",    "DESC", "LIMIT", "COUNT", "MAX", "MIN",   "SUM"};

const char* const kPunct[] = {"(", ")", ",", "=", "<", ">", "!="};

const char* const kQuestionWords[] = {
    "show", "all",  "of",      "and",   "the",      "where",     "is",
    "greater", "less", "than", "not",   "equal",    "to",        "how",
    "many", "rows", "in",      "what",  "largest",  "smallest",  "total",
    "sorted", "by", "top",     "with",  "ascending", "descending", "fk",
    "ask"};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_split_punct(char c) { return c == '(' || c == ')' || c == ','; }

}  // namespace

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary vocab = [] {
    std::vector<std::string> toks;
    for (const char* t : kReserved) toks.push_back(t);
    for (const char* t : kSqlKeywords) toks.push_back(t);
    for (const char* t : kPunct) toks.push_back(t);
    for (const char* t : kTablePool) toks.push_back(t);
    for (const char* t : kColumnPool) toks.push_back(t);
    std::set<int> ints(kWhereIntLiterals.begin(), kWhereIntLiterals.end());
    ints.insert(kLimitLiterals.begin(), kLimitLiterals.end());
    for (int n : ints) toks.push_back(std::to_string(n));
    for (const char* t : kQuestionWords) toks.push_back(t);
    return Vocabulary(std::move(toks));
  }();
  return vocab;
}

Vocabulary::Vocabulary(std::vector<std::string> id_to_token)
    : id_to_token_(std::move(id_to_token)) {
  for (int i = 0; i < int(id_to_token_.size()); ++i) {
    auto [it, inserted] = token_to_id_.emplace(id_to_token_[size_t(i)], i);
    if (!inserted)
      throw std::invalid_argument("duplicate token: " + id_to_token_[size_t(i)]);
  }
}

int Vocabulary::id(const std::string& tok) const {
  auto it = token_to_id_.find(tok);
  if (it == token_to_id_.end()) throw UnknownTokenError(tok);
  return it->second;
}

std::vector<std::string> Vocabulary::split_text(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char c : text) {
    if (is_space(c)) {
      flush();
    } else if (is_split_punct(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

std::string Vocabulary::join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (!out.empty() && t != "(" && t != ")" && t != "," && out.back() != '(')
      out += ' ';
    out += t;
  }
  return out;
}

TokenSequence Vocabulary::encode(const std::string& text, SeqRole role) const {
  TokenSequence seq;
  seq.role = role;
  for (const std::string& tok : split_text(text)) seq.ids.push_back(id(tok));
  seq.ids.push_back(kEosId);
  const int limit = role == SeqRole::Prompt ? kMaxPromptTokens : kMaxOutputTokens;
  if (seq.size() > limit)
    throw SequenceTooLongError("sequence of " + std::to_string(seq.size()) +
                               " tokens exceeds limit " + std::to_string(limit));
  return seq;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> toks;
  for (int id : ids) {
    if (id == kEosId) break;
    if (id == kMaskId) {
      toks.emplace_back("<mask>");
    } else if (id < 0 || id >= size()) {
      toks.push_back("<unk-" + std::to_string(id) + ">");
    } else {
      toks.push_back(id_to_token_[size_t(id)]);
    }
  }
  return join_tokens(toks);
}

void Vocabulary::save(const std::string& path) const {
  nlohmann::json j = id_to_token_;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  f >> j;
  return Vocabulary(j.get<std::vector<std::string>>());
}

}  // namespace kidlab
