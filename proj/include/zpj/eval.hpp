#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "zpj/corpus.hpp"

namespace zpj {

// ASCII lowercase plus simple case folding of Latin-1, Latin Extended-A,
// Greek and Cyrillic capitals. Other code points pass through.
std::string case_fold(const std::string& utf8);

struct BleuStats {
  std::array<long, 4> matches{};
  std::array<long, 4> totals{};
  long hyp_len = 0;
  long ref_len = 0;

  BleuStats& operator+=(const BleuStats& o);
};

// Clipped n-gram counts (n = 1..4) of one case-folded sentence pair.
BleuStats bleu_stats(const Sentence& hyp, const Sentence& ref);
// 100 * BP * exp(mean log p_n); 0 when any order has no match.
double bleu_from_stats(const BleuStats& s);
// Corpus BLEU, one reference per hypothesis.
double bleu(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs);
// Per-sentence BLEU with add-one smoothing on orders 2..4.
double sentence_bleu(const Sentence& hyp, const Sentence& ref);

struct PRF {
  long predicted = 0;
  long gold = 0;
  long matched = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ZpScores {
  PRF position;  // slot only
  PRF word;      // slot and pronoun
};

// Label lines are token-parallel label sequences ("N N ta N").
ZpScores zp_prf(const std::vector<Sentence>& predicted, const std::vector<Sentence>& gold);

// Two-sided sign test on per-item scores; ties are dropped. Exact binomial
// tail up to 1000 untied pairs, normal approximation beyond.
double sign_test(std::span<const double> a, std::span<const double> b);

}  // namespace zpj
