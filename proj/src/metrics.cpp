#include "aaa/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <exception>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "aaa/fsutil.hpp"
#include "aaa/oracle.hpp"

namespace aaa {

namespace {

bool is_ascii_punct(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 128 && std::ispunct(u);
}

bool is_ascii_space(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u < 128 && std::isspace(u);
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const TokenSeq& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ascii_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_ascii_space(text[j])) ++j;
    std::size_t b = i, e = j;
    while (b < e && is_ascii_punct(text[b])) ++b;
    while (e > b && is_ascii_punct(text[e - 1])) --e;
    if (b < e) {
      std::string word(text.substr(b, e - b));
      for (char& c : word)
        if (static_cast<unsigned char>(c) < 128) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      tokens.push_back(std::move(word));
    }
    i = j;
  }
  return tokens;
}

PartOfSpeech parse_pos(std::string_view name) {
  if (name == "noun" || name == "n") return PartOfSpeech::Noun;
  if (name == "verb" || name == "v") return PartOfSpeech::Verb;
  if (name == "adjective" || name == "adj" || name == "a") return PartOfSpeech::Adjective;
  if (name == "adverb" || name == "adv" || name == "r") return PartOfSpeech::Adverb;
  if (name == "other") return PartOfSpeech::Other;
  throw FormatError("unknown part of speech '" + std::string(name) + "'");
}

std::string_view pos_name(PartOfSpeech pos) {
  switch (pos) {
    case PartOfSpeech::Noun: return "noun";
    case PartOfSpeech::Verb: return "verb";
    case PartOfSpeech::Adjective: return "adjective";
    case PartOfSpeech::Adverb: return "adverb";
    case PartOfSpeech::Other: return "other";
  }
  return "other";
}

void SynonymLexicon::add(std::string word, PartOfSpeech pos, std::string synset) {
  auto& entry = entries_[std::move(word)];
  entry.pos.insert(pos);
  if (!synset.empty()) entry.synsets.insert(std::move(synset));
}

const SynonymLexicon::Entry* SynonymLexicon::find(std::string_view word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? nullptr : &it->second;
}

bool SynonymLexicon::share_synset(std::string_view a, std::string_view b) const {
  const Entry* ea = find(a);
  const Entry* eb = find(b);
  if (!ea || !eb) return false;
  for (const auto& s : ea->synsets)
    if (eb->synsets.count(s)) return true;
  return false;
}

SynonymLexicon parse_lexicon(std::string_view tsv) {
  SynonymLexicon lexicon;
  std::istringstream in{std::string(tsv)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1)
      fields.push_back(line.substr(start, tab - start));
    fields.push_back(line.substr(start));
    if (fields.size() != 3 || fields[0].empty())
      throw FormatError("lexicon line " + std::to_string(lineno) + ": expected word<TAB>pos<TAB>synset");
    TokenSeq word = tokenize(fields[0]);
    if (word.size() != 1)
      throw FormatError("lexicon line " + std::to_string(lineno) + ": word must be a single token");
    try {
      lexicon.add(std::move(word[0]), parse_pos(fields[1]), fields[2]);
    } catch (const FormatError& e) {
      throw FormatError("lexicon line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return lexicon;
}

SynonymLexicon load_lexicon(const std::filesystem::path& path) {
  return parse_lexicon(read_file_text(path));
}

Alignment align(const TokenSeq& candidate, const TokenSeq& reference, const SynonymLexicon& lexicon) {
  Alignment a;
  a.candidate_words = candidate.size();
  a.reference_words = reference.size();
  std::vector<bool> used(reference.size(), false);
  constexpr auto npos = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    std::size_t hit = npos;
    for (std::size_t j = 0; j < reference.size() && hit == npos; ++j)
      if (!used[j] && candidate[i] == reference[j]) hit = j;
    for (std::size_t j = 0; j < reference.size() && hit == npos; ++j)
      if (!used[j] && lexicon.share_synset(candidate[i], reference[j])) hit = j;
    if (hit != npos) {
      used[hit] = true;
      a.pairs.emplace_back(i, hit);
    }
  }
  a.matches = a.pairs.size();
  for (std::size_t k = 0; k < a.pairs.size(); ++k) {
    const bool continues = k > 0 && a.pairs[k].first == a.pairs[k - 1].first + 1 &&
                           a.pairs[k].second == a.pairs[k - 1].second + 1;
    if (!continues) ++a.chunks;
  }
  return a;
}

void SemParams::validate() const {
  if (!(alpha > 0)) throw ConfigError("SemParams: alpha must be > 0");
  if (!(gamma >= 0 && gamma <= 1)) throw ConfigError("SemParams: gamma must be within [0, 1]");
  if (!(theta > 0)) throw ConfigError("SemParams: theta must be > 0");
}

double s_sem(const Alignment& alignment, const SemParams& params) {
  params.validate();
  if (alignment.matches == 0) return 0.0;
  const double m = double(alignment.matches);
  const double precision = m / double(alignment.candidate_words);
  const double recall = m / double(alignment.reference_words);
  const double a2 = params.alpha * params.alpha;
  const double fmean = (a2 + 1.0) * precision * recall / (a2 * precision + recall);
  const double penalty = 1.0 - params.gamma * std::pow(double(alignment.chunks) / m, params.theta);
  return penalty * fmean;
}

double s_sem(const TokenSeq& candidate, const TokenSeq& target_semantics, const SynonymLexicon& lexicon,
             const SemParams& params) {
  return s_sem(align(candidate, target_semantics, lexicon), params);
}

double bleu4(const TokenSeq& candidate, const std::vector<TokenSeq>& references) {
  if (references.empty()) throw std::invalid_argument("bleu4: at least one reference is required");
  if (candidate.empty()) return 0.0;

  const std::size_t max_n = std::min<std::size_t>(4, candidate.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const NgramCounts cand = ngrams(candidate, n);
    NgramCounts max_ref;
    for (const auto& ref : references)
      for (const auto& [gram, count] : ngrams(ref, n)) {
        auto& slot = max_ref[gram];
        slot = std::max(slot, count);
      }
    std::size_t clipped = 0;
    for (const auto& [gram, count] : cand) {
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) clipped += std::min(count, it->second);
    }
    if (clipped == 0) return 0.0;
    log_sum += std::log(double(clipped) / double(candidate.size() - n + 1));
  }

  const std::size_t c = candidate.size();
  std::size_t closest = references.front().size();
  for (const auto& ref : references) {
    const auto d = [c](std::size_t r) { return r > c ? r - c : c - r; };
    if (d(ref.size()) < d(closest) || (d(ref.size()) == d(closest) && ref.size() < closest))
      closest = ref.size();
  }
  const double bp = c < closest ? std::exp(1.0 - double(closest) / double(c)) : 1.0;
  return bp * std::exp(log_sum / double(max_n));
}

MetricsReport eval_report(std::string_view adv_text, std::string_view target_text,
                          const SynonymLexicon& lexicon, TextEmbedder& embed,
                          const PerturbationStats& stats) {
  MetricsReport report;
  const TokenSeq adv = tokenize(adv_text);
  const TokenSeq target = tokenize(target_text);
  report.s_sem = s_sem(adv, target, lexicon);
  report.bleu4 = bleu4(adv, {target});

  auto embed_or_throw = [&](std::string_view text) {
    try {
      return embed.embed(text);
    } catch (const std::exception& e) {
      std::throw_with_nested(std::runtime_error("embedding failed for \"" + std::string(text) + "\": " + e.what()));
    }
  };
  const EmbeddingVec u = embed_or_throw(adv_text);
  const EmbeddingVec v = embed_or_throw(target_text);
  report.degenerate_embedding = is_degenerate_embedding(u) || is_degenerate_embedding(v);
  report.clip_score = 1.0 - s_clip(u, v);
  report.stats = stats;
  return report;
}

}  // namespace aaa
