#include "zpj/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "zpj/error.hpp"

namespace zpj {

namespace {

char32_t fold(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if ((c >= 0xC0 && c <= 0xDE && c != 0xD7)) return c + 32;               // Latin-1
  if (c == 0x178) return 0xFF;
  if (c >= 0x100 && c <= 0x17F && c != 0x130 && c != 0x131 && c != 0x138 && c != 0x149 &&
      c != 0x17F) {                                                        // Latin Extended-A
    bool odd_lower = (c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E);
    if (odd_lower) return (c % 2 == 1) ? c + 1 : c;
    return (c % 2 == 0) ? c + 1 : c;
  }
  if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;               // Greek
  if (c >= 0x410 && c <= 0x42F) return c + 32;                             // Cyrillic
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

void append_utf8(std::string& out, char32_t c) {
  if (c < 0x80) {
    out += static_cast<char>(c);
  } else if (c < 0x800) {
    out += static_cast<char>(0xC0 | (c >> 6));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else if (c < 0x10000) {
    out += static_cast<char>(0xE0 | (c >> 12));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (c >> 18));
    out += static_cast<char>(0x80 | ((c >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (c & 0x3F));
  }
}

using Gram = std::vector<std::string>;

std::map<Gram, long> count_ngrams(const Sentence& s, int n) {
  std::map<Gram, long> out;
  for (int i = 0; i + n <= int(s.size()); ++i) ++out[Gram(s.begin() + i, s.begin() + i + n)];
  return out;
}

Sentence folded(const Sentence& s) {
  Sentence out;
  out.reserve(s.size());
  for (auto& t : s) out.push_back(case_fold(t));
  return out;
}

PRF finish(long predicted, long gold, long matched) {
  PRF r{predicted, gold, matched};
  r.precision = predicted ? double(matched) / predicted : 0.0;
  r.recall = gold ? double(matched) / gold : 0.0;
  double s = r.precision + r.recall;
  r.f1 = s > 0 ? 2 * r.precision * r.recall / s : 0.0;
  return r;
}

}  // namespace

std::string case_fold(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    unsigned char b = s[i];
    char32_t c;
    int len;
    if (b < 0x80) {
      c = b;
      len = 1;
    } else if ((b >> 5) == 0x6) {
      c = b & 0x1F;
      len = 2;
    } else if ((b >> 4) == 0xE) {
      c = b & 0x0F;
      len = 3;
    } else if ((b >> 3) == 0x1E) {
      c = b & 0x07;
      len = 4;
    } else {
      out += s[i++];  // stray byte, keep as is
      continue;
    }
    if (i + len > s.size()) {
      out.append(s, i, std::string::npos);
      break;
    }
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      unsigned char cb = s[i + k];
      if ((cb >> 6) != 0x2) ok = false;
      c = (c << 6) | (cb & 0x3F);
    }
    if (!ok) {
      out += s[i++];
      continue;
    }
    append_utf8(out, fold(c));
    i += len;
  }
  return out;
}

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  for (int n = 0; n < 4; ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  hyp_len += o.hyp_len;
  ref_len += o.ref_len;
  return *this;
}

BleuStats bleu_stats(const Sentence& hyp_raw, const Sentence& ref_raw) {
  auto hyp = folded(hyp_raw), ref = folded(ref_raw);
  BleuStats s;
  s.hyp_len = static_cast<long>(hyp.size());
  s.ref_len = static_cast<long>(ref.size());
  for (int n = 1; n <= 4; ++n) {
    auto h = count_ngrams(hyp, n), r = count_ngrams(ref, n);
    for (auto& [g, c] : h) {
      auto it = r.find(g);
      if (it != r.end()) s.matches[n - 1] += std::min(c, it->second);
    }
    s.totals[n - 1] = std::max(0L, s.hyp_len - n + 1);
  }
  return s;
}

double bleu_from_stats(const BleuStats& s) {
  double log_p = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (s.matches[n] == 0 || s.totals[n] == 0) return 0.0;
    log_p += std::log(double(s.matches[n]) / s.totals[n]);
  }
  double bp = s.hyp_len < s.ref_len ? std::exp(1.0 - double(s.ref_len) / s.hyp_len) : 1.0;
  return 100.0 * bp * std::exp(log_p / 4.0);
}

double bleu(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs) {
  if (hyps.size() != refs.size())
    throw ContractError("bleu: " + std::to_string(hyps.size()) + " hypotheses for " +
                        std::to_string(refs.size()) + " references");
  BleuStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) total += bleu_stats(hyps[i], refs[i]);
  return bleu_from_stats(total);
}

double sentence_bleu(const Sentence& hyp, const Sentence& ref) {
  auto s = bleu_stats(hyp, ref);
  if (s.hyp_len == 0) return 0.0;
  double log_p = 0.0;
  for (int n = 0; n < 4; ++n) {
    double m = s.matches[n], t = s.totals[n];
    if (n > 0) {
      m += 1.0;
      t += 1.0;
    }
    if (m == 0.0) return 0.0;
    log_p += std::log(m / t);
  }
  double bp = s.hyp_len < s.ref_len ? std::exp(1.0 - double(s.ref_len) / s.hyp_len) : 1.0;
  return 100.0 * bp * std::exp(log_p / 4.0);
}

ZpScores zp_prf(const std::vector<Sentence>& predicted, const std::vector<Sentence>& gold) {
  if (predicted.size() != gold.size())
    throw ContractError("zp_prf: " + std::to_string(predicted.size()) + " predicted lines for " +
                        std::to_string(gold.size()) + " gold lines");
  long np = 0, ng = 0, pos = 0, word = 0;
  for (std::size_t line = 0; line < gold.size(); ++line) {
    auto& p = predicted[line];
    auto& g = gold[line];
    if (p.size() != g.size())
      throw ContractError("zp_prf: line " + std::to_string(line + 1) + " has " +
                          std::to_string(p.size()) + " predicted labels but " +
                          std::to_string(g.size()) + " gold labels");
    for (std::size_t s = 0; s < g.size(); ++s) {
      bool pz = p[s] != kNoZp, gz = g[s] != kNoZp;
      np += pz;
      ng += gz;
      if (pz && gz) {
        ++pos;
        word += p[s] == g[s];
      }
    }
  }
  return {finish(np, ng, pos), finish(np, ng, word)};
}

double sign_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ContractError("sign_test: " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + " scores");
  long wins = 0, losses = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    wins += a[i] > b[i];
    losses += a[i] < b[i];
  }
  long n = wins + losses;
  if (n == 0) return 1.0;
  long k = std::min(wins, losses);
  if (n > 1000) {
    double z = (std::abs(double(wins - losses)) - 1.0) / std::sqrt(double(n));
    return std::min(1.0, std::erfc(std::max(z, 0.0) / std::sqrt(2.0)));
  }
  // log C(n, i) - n log 2, summed in log space
  double tail = 0.0;
  for (long i = 0; i <= k; ++i)
    tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) -
                     n * std::log(2.0));
  return std::min(1.0, 2.0 * tail);
}

}  // namespace zpj
