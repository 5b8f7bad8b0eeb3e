#include <doctest.h>

#include <algorithm>
#include <mutex>
#include <set>

#include "aaa/ask.hpp"
#include "aaa/fixture.hpp"

using namespace aaa;

namespace {

SynonymLexicon small_lexicon() {
  return parse_lexicon(
      "man\tnoun\tman.n.01\n"
      "running\tverb\trun.v.01\n"
      "is\tother\tbe\n"
      "a\tother\tdet\n"
      "light\tnoun\tlight.n.01\n"
      "light\tadjective\tbright.a.01\n"
      "light\tverb\tlight.v.01\n"
      "quickly\tadverb\tquick.r.01\n");
}

/// Records every caption it returns so harvested words can be audited.
class RecordingCaptioner final : public TextGenerator {
 public:
  std::set<std::string> seen;

 protected:
  std::string do_generate(const ImageTensor& image) override {
    std::string text = toy_generate(image);
    std::lock_guard lock(mutex_);
    seen.insert(text);
    return text;
  }

 private:
  std::mutex mutex_;
};

DEConfig ask_config(std::uint64_t seed, int generations = 10) {
  DEConfig c;
  c.seed = seed;
  c.eta = 50;
  c.max_generations = generations;
  return c;
}

}  // namespace

TEST_CASE("extract_content_words") {
  const SynonymLexicon lex = small_lexicon();
  using P = PartOfSpeech;
  CHECK(extract_content_words("a man is running", lex) == std::set<ContentWord>{{"man", P::Noun}, {"running", P::Verb}});
  CHECK(extract_content_words("a is a", lex).empty());
  CHECK(extract_content_words("zebra quickly", lex).empty());
  CHECK(extract_content_words("Light", lex) ==
        std::set<ContentWord>{{"light", P::Noun}, {"light", P::Adjective}, {"light", P::Verb}});
}

TEST_CASE("TargetDictionary") {
  const SynonymLexicon lex = small_lexicon();
  TargetDictionary d;
  CHECK(d.empty());
  d.harvest("a man is running", lex, 2);
  d.harvest("a man", lex, 1);
  d.harvest("light", lex, 3);
  CHECK(d.size() == 5);
  CHECK(d.contains("man"));
  CHECK_FALSE(d.contains("is"));

  const auto ranked = d.ranked();
  CHECK(ranked[0].word == "man");
  CHECK(ranked[0].count == 2);
  CHECK(ranked[0].first_generation == 1);
  CHECK(d.to_tsv() ==
        "man\tnoun\t1\t2\n"
        "light\tnoun\t3\t1\n"
        "light\tverb\t3\t1\n"
        "light\tadjective\t3\t1\n"
        "running\tverb\t2\t1\n");
}

TEST_CASE("run_ask on the toy fixture") {
  const SynonymLexicon lex = toy_lexicon();
  const std::set<std::string> toy_vocab = {"a", "photo", "of", "square", "and", "bright", "dark", "red", "green", "blue"};

  SUBCASE("dictionary grows monotonically and only from oracle output") {
    RecordingCaptioner oracle;
    DEConfig c = ask_config(3);
    // A fixed seed makes a shorter run a prefix of a longer one.
    std::set<ContentWord> previous;
    for (int g = 1; g <= 6; ++g) {
      c.max_generations = g;
      std::set<ContentWord> words;
      for (const auto& e : run_ask(quadrant_fixture(5), "photo", oracle, lex, c).dictionary.ranked())
        words.emplace(e.word, e.pos);
      CHECK(std::includes(words.begin(), words.end(), previous.begin(), previous.end()));
      previous = std::move(words);
    }

    c.max_generations = 10;
    RecordingCaptioner audited;
    const AskResult r = run_ask(quadrant_fixture(5), "photo", audited, lex, c);
    CHECK(r.trace.queries() == std::uint64_t(c.np) * 11);
    CHECK(audited.stats().snapshot().generate_queries == r.trace.queries());
    std::set<std::string> spoken;
    for (const auto& text : audited.seen)
      for (const auto& w : tokenize(text)) spoken.insert(w);
    for (const auto& e : r.dictionary.ranked()) {
      CHECK(spoken.count(e.word) == 1);
      CHECK(toy_vocab.count(e.word) == 1);
      CHECK(e.first_generation >= 1);
      CHECK(e.pos != PartOfSpeech::Other);
    }
    for (std::size_t g = 1; g < r.trace.records.size(); ++g)
      CHECK(r.trace.records[g].best_fitness >= r.trace.records[g - 1].best_fitness);
  }
  SUBCASE("margin 5 reaches blue, margin 200 stays red") {
    QuadrantCaptioner oracle;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const AskResult near = run_ask(quadrant_fixture(5), "photo", oracle, lex, ask_config(seed));
      CHECK(near.dictionary.contains("red"));
      CHECK(near.dictionary.contains("blue"));
      const AskResult far = run_ask(quadrant_fixture(200), "photo", oracle, lex, ask_config(seed));
      CHECK(far.dictionary.contains("red"));
      CHECK_FALSE(far.dictionary.contains("blue"));
      CHECK_FALSE(far.dictionary.contains("green"));
    }
  }
  SUBCASE("zero generations harvests the initial population") {
    QuadrantCaptioner oracle;
    const AskResult r = run_ask(quadrant_fixture(200), "photo", oracle, lex, ask_config(1, 0));
    CHECK(r.trace.queries() == 40);
    CHECK_FALSE(r.dictionary.empty());
    for (const auto& e : r.dictionary.ranked()) {
      CHECK(e.first_generation == 0);
      CHECK(e.count == 40);
    }
    // The clean caption's content words exactly.
    std::set<ContentWord> expected = extract_content_words(toy_generate(quadrant_fixture(200)), lex);
    std::set<ContentWord> got;
    for (const auto& e : r.dictionary.ranked()) got.emplace(e.word, e.pos);
    CHECK(got == expected);
  }
  SUBCASE("initial-population harvest flag") {
    QuadrantCaptioner oracle;
    AskOptions opts;
    opts.harvest_initial = true;
    const AskResult r = run_ask(quadrant_fixture(200), "photo", oracle, lex, ask_config(1, 2), opts);
    CHECK(r.dictionary.ranked().front().first_generation == 0);
    const AskResult off = run_ask(quadrant_fixture(200), "photo", oracle, lex, ask_config(1, 2));
    CHECK(off.dictionary.ranked().front().first_generation == 1);
  }
  SUBCASE("deterministic for a fixed seed") {
    QuadrantCaptioner oracle;
    const auto a = run_ask(quadrant_fixture(5), "photo", oracle, lex, ask_config(9));
    const auto b = run_ask(quadrant_fixture(5), "photo", oracle, lex, ask_config(9));
    CHECK(a.dictionary.to_tsv() == b.dictionary.to_tsv());
  }
  SUBCASE("empty semantics") {
    QuadrantCaptioner oracle;
    CHECK_THROWS_AS(run_ask(quadrant_fixture(5), " , ", oracle, lex, ask_config(1)), std::invalid_argument);
  }
}
