#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aaa/de.hpp"
#include "aaa/metrics.hpp"
#include "aaa/oracle.hpp"

namespace aaa {

using ContentWord = std::pair<std::string, PartOfSpeech>;

/// Tokens whose lexicon tags include noun, adjective or verb; one entry per
/// qualifying tag. Words missing from the lexicon are dropped.
std::set<ContentWord> extract_content_words(std::string_view text, const SynonymLexicon& lexicon);

struct DictionaryEntry {
  std::string word;
  PartOfSpeech pos = PartOfSpeech::Noun;
  int first_generation = 0;
  std::uint64_t count = 0;
};

/// Content words harvested from surviving individuals' captions. Grows by
/// union; `count` is the number of harvests that produced the word.
class TargetDictionary {
 public:
  void add(const ContentWord& word, int generation);
  void harvest(std::string_view text, const SynonymLexicon& lexicon, int generation);

  bool contains(std::string_view word) const;
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  /// Sorted by count descending, then word, then POS.
  std::vector<DictionaryEntry> ranked() const;

  /// `word<TAB>pos<TAB>first_generation<TAB>count` lines in ranked order.
  std::string to_tsv() const;

 private:
  std::vector<DictionaryEntry> entries_;
};

struct AskOptions {
  /// Also harvest the initial (unselected) population. Off by default: the
  /// dictionary starts with the first selection's survivors.
  bool harvest_initial = false;
  SemParams sem_params;
};

struct AskResult {
  TargetDictionary dictionary;
  RunTrace trace;
};

/// Rand/1 DE maximising S_sem between each individual's caption and the
/// target semantics, harvesting content words from every survivor. With
/// max_generations == 0 the initial population is harvested.
AskResult run_ask(const ImageTensor& clean, std::string_view target_semantics, TextGenerator& oracle,
                  const SynonymLexicon& lexicon, DEConfig config, const AskOptions& options = {});

}  // namespace aaa
