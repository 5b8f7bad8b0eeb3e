#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aaa/errors.hpp"
#include "aaa/image.hpp"

namespace aaa {

class TextEmbedder;

/// Lowercased words with surrounding ASCII punctuation removed.
using TokenSeq = std::vector<std::string>;

using EmbeddingVec = Eigen::VectorXd;

TokenSeq tokenize(std::string_view text);

enum class PartOfSpeech { Noun, Verb, Adjective, Adverb, Other };

PartOfSpeech parse_pos(std::string_view name);
std::string_view pos_name(PartOfSpeech pos);

/// Word -> (POS tags, synset ids). Read-only once loaded.
class SynonymLexicon {
 public:
  struct Entry {
    std::set<PartOfSpeech> pos;
    std::set<std::string> synsets;
  };

  void add(std::string word, PartOfSpeech pos, std::string synset);

  const Entry* find(std::string_view word) const;
  bool contains(std::string_view word) const { return find(word) != nullptr; }
  bool share_synset(std::string_view a, std::string_view b) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, Entry, std::less<>> entries_;
};

/// TSV rows `word<TAB>pos<TAB>synset`; repeated words accumulate. Blank lines
/// and lines starting with '#' are skipped.
SynonymLexicon parse_lexicon(std::string_view tsv);
SynonymLexicon load_lexicon(const std::filesystem::path& path);

struct Alignment {
  std::size_t matches = 0;           // m
  std::size_t candidate_words = 0;   // t
  std::size_t reference_words = 0;   // r
  std::size_t chunks = 0;            // ch
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (candidate, reference)
};

/// Greedy left-to-right matching: each candidate word takes the first unused
/// reference word that is string-equal, falling back to the first unused one
/// sharing a synset.
Alignment align(const TokenSeq& candidate, const TokenSeq& reference, const SynonymLexicon& lexicon);

struct SemParams {
  double alpha = 3.0;
  double gamma = 0.5;
  double theta = 3.0;

  void validate() const;
};

/// Chunk-penalised weighted F-mean of precision m/t and recall m/r; 0 when
/// nothing matches.
double s_sem(const Alignment& alignment, const SemParams& params = {});
double s_sem(const TokenSeq& candidate, const TokenSeq& target_semantics,
             const SynonymLexicon& lexicon, const SemParams& params = {});

template <typename Derived>
bool is_degenerate_embedding(const Eigen::MatrixBase<Derived>& v) {
  return v.squaredNorm() == 0;
}

/// Cosine similarity; -1 when either vector is zero.
template <typename DerivedA, typename DerivedB>
double cosine_similarity(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
  if (u.size() != v.size())
    throw DimensionError("embedding dimensions " + std::to_string(u.size()) + " and " +
                         std::to_string(v.size()) + " differ");
  const double nu = u.template cast<double>().norm();
  const double nv = v.template cast<double>().norm();
  if (nu == 0.0 || nv == 0.0) return -1.0;
  const double cosine = u.template cast<double>().dot(v.template cast<double>()) / (nu * nv);
  return std::clamp(cosine, -1.0, 1.0);
}

/// Cosine distance 1 - cos(u, v) in [0, 2]. A zero vector on either side is
/// treated as maximally distant (2) so fitness stays totally ordered.
template <typename DerivedA, typename DerivedB>
double s_clip(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
  return 1.0 - cosine_similarity(u, v);
}

/// Sentence BLEU with up to 4-grams, clipped counts, closest-length brevity
/// penalty and no smoothing.
double bleu4(const TokenSeq& candidate, const std::vector<TokenSeq>& references);

struct MetricsReport {
  double s_sem = 0.0;
  double bleu4 = 0.0;
  double clip_score = 0.0;  // 1 - s_clip, so 1 means similar
  bool degenerate_embedding = false;
  PerturbationStats stats;
};

/// Scores an adversarial caption against the target text. Embedding failures
/// propagate as std::runtime_error naming the text that failed.
MetricsReport eval_report(std::string_view adv_text, std::string_view target_text,
                          const SynonymLexicon& lexicon, TextEmbedder& embed,
                          const PerturbationStats& stats);

}  // namespace aaa
