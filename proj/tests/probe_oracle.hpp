#pragma once

// Brute-force probe scoring straight from raw records, without the
// confusion matrix, plus seeded synthetic prediction sets.

#include <optional>
#include <vector>

#include "codeattn/probing.hpp"
#include "codeattn/rng.hpp"

namespace codeattn::oracles {

struct BruteScore {
  std::optional<double> precision, recall, f1;
  std::size_t n = 0;
};

inline BruteScore brute_force_score(const std::vector<ProbeRecord>& records, TokenType type) {
  std::size_t tp = 0, fp = 0, fn = 0, n = 0;
  for (const auto& r : records) {
    const bool gold = r.gold == type;
    const bool predicted = r.predicted == type;
    n += gold;
    tp += gold && predicted;
    fp += !gold && predicted;
    fn += gold && !predicted;
  }
  BruteScore s;
  s.n = n;
  if (tp + fp > 0) s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (s.precision && s.recall && *s.precision + *s.recall > 0.0) {
    s.f1 = 2.0 * *s.precision * *s.recall / (*s.precision + *s.recall);
  }
  return s;
}

// Gold types drawn from the probe types; predictions are right with
// probability accuracy and otherwise any token type, literals included.
inline std::vector<ProbeRecord> synthetic_probe_records(std::uint64_t seed, std::size_t count, double accuracy) {
  Rng rng(seed);
  std::vector<ProbeRecord> records;
  for (std::size_t i = 0; i < count; ++i) {
    ProbeRecord r;
    r.sequence = i / 10;
    r.position = 1 + i % 10;
    r.gold = kProbeTypes[rng.below(std::size(kProbeTypes))];
    r.predicted = rng.bernoulli(accuracy) ? r.gold : static_cast<TokenType>(rng.below(14));
    records.push_back(r);
  }
  return records;
}

inline bool same(const std::optional<double>& a, const std::optional<double>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || std::abs(*a - *b) <= 1e-12;
}

// True when score(confusion_from_records(records)) agrees with the brute force
// for every probe type.
inline bool scorer_matches_brute_force(const std::vector<ProbeRecord>& records) {
  const auto scores = score(confusion_from_records(records));
  if (scores.size() != std::size(kProbeTypes)) return false;
  for (const auto& s : scores) {
    const BruteScore b = brute_force_score(records, s.type);
    if (s.n != b.n || !same(s.precision, b.precision) || !same(s.recall, b.recall) || !same(s.f1, b.f1)) return false;
  }
  return true;
}

}  // namespace codeattn::oracles
