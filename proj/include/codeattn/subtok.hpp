#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "codeattn/attention.hpp"
#include "codeattn/java_lexer.hpp"

namespace codeattn {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr int kMaskId = 4;
inline constexpr int kReservedCount = 5;

inline constexpr std::string_view kContinuationPrefix = "##";

class Vocab {
 public:
  // Starts with the five reserved pieces only.
  Vocab();

  // Adds a piece if absent; returns its id.
  int add(std::string piece);

  int size() const { return static_cast<int>(pieces_.size()); }
  const std::string& piece(int id) const;
  // Returns kUnkId when the piece is absent.
  int id(std::string_view piece) const;
  bool contains(std::string_view piece) const;
  const std::vector<std::string>& pieces() const { return pieces_; }

  static bool is_reserved(int id) { return id >= 0 && id < kReservedCount; }

  // One piece per line; line index is the id.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);
  std::string serialize() const;

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> index_;
};

// Greedy pair-merge subword induction over a word-count table. Merge ties
// break on the lexicographically smallest (left, right) pair.
Vocab train_vocab(const std::map<std::string, std::size_t>& word_counts, std::size_t target_size);

// Greedy longest-match segmentation of one word. Residue that no piece
// covers becomes a single [UNK].
std::vector<int> segment_word(std::string_view word, const Vocab& vocab);

// Joins pieces back into text, dropping continuation prefixes.
std::string join_pieces(std::span<const int> ids, const Vocab& vocab);

enum class WordKind { Token, Cls, Sep };

// One word-level position of a framed sequence: either a lexer token or a
// framing token. Covers subtoken positions [first, last).
struct AlignedWord {
  std::size_t first = 0;
  std::size_t last = 0;
  WordKind kind = WordKind::Token;
  int token_index = -1;  // index into the kept lexer tokens; -1 for framing tokens
  int segment = 0;

  std::size_t width() const { return last - first; }
};

// Maps subtoken positions back to words. Words are ordered, contiguous and
// cover every subtoken position exactly once.
struct AlignmentMap {
  std::vector<AlignedWord> words;
  std::size_t subtoken_count = 0;

  // Word index owning each subtoken position.
  std::vector<std::size_t> word_of_position() const;
  // Subtoken range of the i-th kept lexer token.
  std::pair<std::size_t, std::size_t> token_range(std::size_t token_index) const;
  std::size_t token_count() const;
};

struct FramedSequence {
  std::vector<int> ids;
  std::vector<int> segments;
  AlignmentMap alignment;
  std::size_t kept_first = 0;   // lexer tokens kept from the first (or only) side
  std::size_t kept_second = 0;  // lexer tokens kept from the second side
  bool truncated = false;
};

using WordPieces = std::vector<std::vector<int>>;

WordPieces segment_words(std::span<const Token> tokens, const Vocab& vocab);

// [CLS] w... [SEP]; trailing whole words are dropped to fit max_len.
FramedSequence frame_single(const WordPieces& words, std::size_t max_len);

// [CLS] a... [SEP] b... [SEP] with segment ids 0/1; trailing whole words are
// dropped from the longer side first until the sequence fits.
FramedSequence frame_pair(const WordPieces& first, const WordPieces& second, std::size_t max_len);

FramedSequence tokenize(std::span<const Token> tokens, const Vocab& vocab, std::size_t max_len);

// Word-level attention: columns of a word are summed, then rows of a word are
// averaged. Framing tokens stay as their own words.
AttentionTensor aggregate_attention(const AttentionTensor& attention, const AlignmentMap& map);

}  // namespace codeattn
