#include "aaa/ask.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

namespace aaa {

std::set<ContentWord> extract_content_words(std::string_view text, const SynonymLexicon& lexicon) {
  std::set<ContentWord> words;
  for (const auto& token : tokenize(text)) {
    const auto* entry = lexicon.find(token);
    if (!entry) continue;
    for (PartOfSpeech pos : {PartOfSpeech::Noun, PartOfSpeech::Adjective, PartOfSpeech::Verb})
      if (entry->pos.count(pos)) words.emplace(token, pos);
  }
  return words;
}

void TargetDictionary::add(const ContentWord& word, int generation) {
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const DictionaryEntry& e) {
    return e.word == word.first && e.pos == word.second;
  });
  if (it == entries_.end()) {
    entries_.push_back({word.first, word.second, generation, 1});
  } else {
    ++it->count;
    it->first_generation = std::min(it->first_generation, generation);
  }
}

void TargetDictionary::harvest(std::string_view text, const SynonymLexicon& lexicon, int generation) {
  for (const auto& word : extract_content_words(text, lexicon)) add(word, generation);
}

bool TargetDictionary::contains(std::string_view word) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const DictionaryEntry& e) { return e.word == word; });
}

std::vector<DictionaryEntry> TargetDictionary::ranked() const {
  auto out = entries_;
  std::sort(out.begin(), out.end(), [](const DictionaryEntry& a, const DictionaryEntry& b) {
    return std::make_tuple(-static_cast<long double>(a.count), std::cref(a.word), a.pos) <
           std::make_tuple(-static_cast<long double>(b.count), std::cref(b.word), b.pos);
  });
  return out;
}

std::string TargetDictionary::to_tsv() const {
  std::ostringstream out;
  for (const auto& e : ranked())
    out << e.word << '\t' << pos_name(e.pos) << '\t' << e.first_generation << '\t' << e.count << '\n';
  return out.str();
}

AskResult run_ask(const ImageTensor& clean, std::string_view target_semantics, TextGenerator& oracle,
                  const SynonymLexicon& lexicon, DEConfig config, const AskOptions& options) {
  const TokenSeq semantics = tokenize(target_semantics);
  if (semantics.empty()) throw std::invalid_argument("run_ask: target semantics are empty");
  config.strategy = Strategy::Rand1;
  config.direction = Direction::Maximize;

  FitnessFn fitness = [&](const ImageTensor& genome) {
    std::string text = oracle.generate(genome);
    const double score = s_sem(tokenize(text), semantics, lexicon, options.sem_params);
    return Evaluation{score, std::move(text)};
  };

  AskResult result;
  RunHooks hooks;
  const bool harvest_initial = options.harvest_initial || config.max_generations == 0;
  hooks.on_generation = [&](int generation, const Population& population) {
    if (generation == 0 && !harvest_initial) return;
    for (const auto& ind : population) result.dictionary.harvest(*ind.output_text, lexicon, generation);
  };
  result.trace = run(clean, init_uniform, fitness, config, hooks);
  return result;
}

}  // namespace aaa
