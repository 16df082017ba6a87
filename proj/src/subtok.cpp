#include "codeattn/subtok.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "codeattn/csv.hpp"
#include "codeattn/error.hpp"

namespace codeattn {
namespace {

constexpr std::string_view kReservedPieces[kReservedCount] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]",
                                                              "[MASK]"};

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;  // stray continuation byte: treat as its own character
}

std::vector<std::string_view> split_chars(std::string_view word) {
  std::vector<std::string_view> chars;
  std::size_t i = 0;
  while (i < word.size()) {
    const std::size_t n = std::min(utf8_length(static_cast<unsigned char>(word[i])), word.size() - i);
    chars.push_back(word.substr(i, n));
    i += n;
  }
  return chars;
}

bool has_line_break(std::string_view word) { return word.find_first_of("\r\n") != std::string_view::npos; }

}  // namespace

Vocab::Vocab() {
  for (std::string_view piece : kReservedPieces) add(std::string(piece));
}

int Vocab::add(std::string piece) {
  if (auto it = index_.find(piece); it != index_.end()) return it->second;
  if (has_line_break(piece)) throw VocabularyError("vocabulary pieces cannot contain line breaks");
  const int id = size();
  index_.emplace(piece, id);
  pieces_.push_back(std::move(piece));
  return id;
}

const std::string& Vocab::piece(int id) const {
  if (id < 0 || id >= size()) throw VocabularyError("piece id " + std::to_string(id) + " out of range");
  return pieces_[static_cast<std::size_t>(id)];
}

int Vocab::id(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  return it == index_.end() ? kUnkId : it->second;
}

bool Vocab::contains(std::string_view piece) const { return index_.count(std::string(piece)) > 0; }

std::string Vocab::serialize() const {
  std::string out;
  for (const auto& piece : pieces_) {
    out += piece;
    out += '\n';
  }
  return out;
}

void Vocab::save(const std::filesystem::path& path) const { csv::write_file_atomic(path, serialize()); }

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw VocabularyError("cannot read vocabulary file " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() < static_cast<std::size_t>(kReservedCount)) {
    throw VocabularyError("vocabulary file " + path.string() + " is missing reserved pieces");
  }
  Vocab vocab;
  for (int i = 0; i < kReservedCount; ++i) {
    if (lines[static_cast<std::size_t>(i)] != kReservedPieces[i]) {
      throw VocabularyError("vocabulary id " + std::to_string(i) + " must be " +
                            std::string(kReservedPieces[i]));
    }
  }
  for (std::size_t i = kReservedCount; i < lines.size(); ++i) {
    if (vocab.contains(lines[i])) throw VocabularyError("duplicate vocabulary piece '" + lines[i] + "'");
    vocab.add(lines[i]);
  }
  return vocab;
}

Vocab train_vocab(const std::map<std::string, std::size_t>& word_counts, std::size_t target_size) {
  if (word_counts.empty()) throw VocabularyError("cannot train a vocabulary on an empty corpus");

  std::set<std::string> symbols;
  std::set<std::string_view> distinct_chars;
  struct Word {
    std::vector<int> symbols;
    std::size_t count;
  };
  std::vector<std::vector<std::string>> spelled;
  std::vector<std::size_t> counts;

  for (const auto& [word, count] : word_counts) {
    if (word.empty() || count == 0 || has_line_break(word)) continue;
    std::vector<std::string> pieces;
    bool first = true;
    for (std::string_view ch : split_chars(word)) {
      distinct_chars.insert(ch);
      pieces.push_back(first ? std::string(ch) : std::string(kContinuationPrefix) + std::string(ch));
      first = false;
    }
    for (const auto& p : pieces) symbols.insert(p);
    spelled.push_back(std::move(pieces));
    counts.push_back(count);
  }
  if (spelled.empty()) throw VocabularyError("corpus has no trainable words");
  if (target_size <= distinct_chars.size() + kReservedCount) {
    throw VocabularyError("target vocabulary size " + std::to_string(target_size) +
                          " must exceed distinct characters + reserved pieces (" +
                          std::to_string(distinct_chars.size() + kReservedCount) + ")");
  }

  Vocab vocab;
  for (const auto& symbol : symbols) vocab.add(symbol);
  if (static_cast<std::size_t>(vocab.size()) > target_size) {
    throw VocabularyError("target vocabulary size " + std::to_string(target_size) +
                          " cannot hold the " + std::to_string(vocab.size()) + " base pieces");
  }

  std::vector<Word> words;
  words.reserve(spelled.size());
  for (std::size_t w = 0; w < spelled.size(); ++w) {
    Word word{{}, counts[w]};
    for (const auto& p : spelled[w]) word.symbols.push_back(vocab.id(p));
    words.push_back(std::move(word));
  }

  auto pair_key = [](int left, int right) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(left)) << 32) |
           static_cast<std::uint32_t>(right);
  };

  std::unordered_map<std::uint64_t, std::size_t> pair_counts;
  while (static_cast<std::size_t>(vocab.size()) < target_size) {
    pair_counts.clear();
    for (const Word& word : words) {
      for (std::size_t i = 0; i + 1 < word.symbols.size(); ++i) {
        pair_counts[pair_key(word.symbols[i], word.symbols[i + 1])] += word.count;
      }
    }
    if (pair_counts.empty()) break;

    std::uint64_t best = 0;
    std::size_t best_count = 0;
    for (const auto& [key, count] : pair_counts) {
      if (count < best_count) continue;
      if (count == best_count) {
        const auto& bl = vocab.piece(static_cast<int>(best >> 32));
        const auto& br = vocab.piece(static_cast<int>(best & 0xffffffffu));
        const auto& kl = vocab.piece(static_cast<int>(key >> 32));
        const auto& kr = vocab.piece(static_cast<int>(key & 0xffffffffu));
        if (std::tie(kl, kr) >= std::tie(bl, br)) continue;
      }
      best = key;
      best_count = count;
    }

    const int left = static_cast<int>(best >> 32);
    const int right = static_cast<int>(best & 0xffffffffu);
    std::string merged = vocab.piece(left) + vocab.piece(right).substr(kContinuationPrefix.size());
    const int merged_id = vocab.add(std::move(merged));

    for (Word& word : words) {
      auto& s = word.symbols;
      std::size_t out = 0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == left && s[i + 1] == right) {
          s[out++] = merged_id;
          ++i;
        } else {
          s[out++] = s[i];
        }
      }
      s.resize(out);
    }
  }
  return vocab;
}

std::vector<int> segment_word(std::string_view word, const Vocab& vocab) {
  std::vector<int> ids;
  if (word.empty()) return ids;
  // Character boundaries so candidate substrings never split a UTF-8 sequence.
  std::vector<std::size_t> bounds{0};
  for (std::string_view ch : split_chars(word)) bounds.push_back(bounds.back() + ch.size());

  std::size_t start = 0;  // index into bounds
  std::string candidate;
  while (start + 1 < bounds.size()) {
    int found = -1;
    std::size_t end = bounds.size() - 1;
    for (; end > start; --end) {
      candidate.clear();
      if (start > 0) candidate += kContinuationPrefix;
      candidate += word.substr(bounds[start], bounds[end] - bounds[start]);
      if (vocab.contains(candidate)) {
        found = vocab.id(candidate);
        break;
      }
    }
    if (found < 0) {
      ids.push_back(kUnkId);
      break;
    }
    ids.push_back(found);
    start = end;
  }
  return ids;
}

std::string join_pieces(std::span<const int> ids, const Vocab& vocab) {
  std::string out;
  for (int id : ids) {
    const std::string& piece = vocab.piece(id);
    if (!Vocab::is_reserved(id) && piece.starts_with(kContinuationPrefix)) {
      out += piece.substr(kContinuationPrefix.size());
    } else {
      out += piece;
    }
  }
  return out;
}

std::vector<std::size_t> AlignmentMap::word_of_position() const {
  std::vector<std::size_t> owner(subtoken_count, 0);
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (std::size_t p = words[w].first; p < words[w].last; ++p) owner[p] = w;
  }
  return owner;
}

std::pair<std::size_t, std::size_t> AlignmentMap::token_range(std::size_t token_index) const {
  for (const auto& word : words) {
    if (word.kind == WordKind::Token && word.token_index == static_cast<int>(token_index)) {
      return {word.first, word.last};
    }
  }
  throw ShapeError("token " + std::to_string(token_index) + " is not in the alignment");
}

std::size_t AlignmentMap::token_count() const {
  return static_cast<std::size_t>(std::count_if(
      words.begin(), words.end(), [](const AlignedWord& w) { return w.kind == WordKind::Token; }));
}

WordPieces segment_words(std::span<const Token> tokens, const Vocab& vocab) {
  WordPieces words;
  words.reserve(tokens.size());
  for (const Token& token : tokens) words.push_back(segment_word(token.text, vocab));
  return words;
}

namespace {

class SequenceBuilder {
 public:
  void special(int id, WordKind kind, int segment) {
    const std::size_t pos = seq_.ids.size();
    seq_.ids.push_back(id);
    seq_.segments.push_back(segment);
    seq_.alignment.words.push_back({pos, pos + 1, kind, -1, segment});
  }

  void word(const std::vector<int>& pieces, int segment) {
    const std::size_t pos = seq_.ids.size();
    for (int id : pieces) {
      seq_.ids.push_back(id);
      seq_.segments.push_back(segment);
    }
    seq_.alignment.words.push_back({pos, seq_.ids.size(), WordKind::Token, next_token_++, segment});
  }

  FramedSequence finish() {
    seq_.alignment.subtoken_count = seq_.ids.size();
    return std::move(seq_);
  }

  FramedSequence& seq() { return seq_; }

 private:
  FramedSequence seq_;
  int next_token_ = 0;
};

std::size_t piece_count(const WordPieces& words, std::size_t kept) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < kept; ++i) total += words[i].size();
  return total;
}

}  // namespace

FramedSequence frame_single(const WordPieces& words, std::size_t max_len) {
  if (max_len < 2) throw LengthError("max_len must leave room for [CLS] and [SEP]");
  const std::size_t budget = max_len - 2;
  std::size_t kept = 0, used = 0;
  while (kept < words.size() && used + words[kept].size() <= budget) used += words[kept++].size();

  SequenceBuilder builder;
  builder.special(kClsId, WordKind::Cls, 0);
  for (std::size_t i = 0; i < kept; ++i) builder.word(words[i], 0);
  builder.special(kSepId, WordKind::Sep, 0);
  builder.seq().kept_first = kept;
  builder.seq().truncated = kept < words.size();
  return builder.finish();
}

FramedSequence frame_pair(const WordPieces& first, const WordPieces& second, std::size_t max_len) {
  if (max_len < 3) throw LengthError("max_len must leave room for [CLS] and two [SEP]");
  const std::size_t budget = max_len - 3;
  std::size_t ka = first.size(), kb = second.size();
  std::size_t pa = piece_count(first, ka), pb = piece_count(second, kb);
  while (pa + pb > budget) {
    if (pa > pb) {
      pa -= first[--ka].size();
    } else {
      pb -= second[--kb].size();
    }
  }

  SequenceBuilder builder;
  builder.special(kClsId, WordKind::Cls, 0);
  for (std::size_t i = 0; i < ka; ++i) builder.word(first[i], 0);
  builder.special(kSepId, WordKind::Sep, 0);
  for (std::size_t i = 0; i < kb; ++i) builder.word(second[i], 1);
  builder.special(kSepId, WordKind::Sep, 1);
  builder.seq().kept_first = ka;
  builder.seq().kept_second = kb;
  builder.seq().truncated = ka < first.size() || kb < second.size();
  return builder.finish();
}

FramedSequence tokenize(std::span<const Token> tokens, const Vocab& vocab, std::size_t max_len) {
  return frame_single(segment_words(tokens, vocab), max_len);
}

AttentionTensor aggregate_attention(const AttentionTensor& attention, const AlignmentMap& map) {
  if (attention.seq_len() != map.subtoken_count) {
    throw ShapeError("attention length " + std::to_string(attention.seq_len()) +
                     " does not match alignment length " + std::to_string(map.subtoken_count));
  }
  const std::size_t n = attention.seq_len();
  const std::size_t w = map.words.size();
  const auto owner = map.word_of_position();

  AttentionTensor out(attention.layers(), attention.heads(), w);
  std::vector<double> column_sums(n * w);
  for (std::size_t l = 0; l < attention.layers(); ++l) {
    for (std::size_t h = 0; h < attention.heads(); ++h) {
      std::fill(column_sums.begin(), column_sums.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = attention.row(l, h, i);
        for (std::size_t j = 0; j < n; ++j) column_sums[i * w + owner[j]] += row[j];
      }
      for (std::size_t a = 0; a < w; ++a) {
        const AlignedWord& word = map.words[a];
        const double inv_width = 1.0 / static_cast<double>(word.width());
        for (std::size_t b = 0; b < w; ++b) {
          double sum = 0.0;
          for (std::size_t i = word.first; i < word.last; ++i) sum += column_sums[i * w + b];
          out.at(l, h, a, b) = word.width() == 1 ? sum : sum * inv_width;
        }
      }
    }
  }
  return out;
}

}  // namespace codeattn
