// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "aaa/ask.hpp"
#include "aaa/attack.hpp"
#include "aaa/attend.hpp"
#include "aaa/fixture.hpp"
#include "test_support.hpp"

#include "metric_cases.inc"

using namespace aaa;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int number, const std::string& name, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("threw: ") + e.what()};
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!v.pass) ++failures;
  std::printf("%s  %d. %s: %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", number, name.c_str(), v.detail.c_str(),
              seconds);
  std::fflush(stdout);
}

template <typename... Args>
std::string format(const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Captions with the toy grammar and checks the budget of every genome it sees.
class BudgetCheckedCaptioner final : public TextGenerator {
 public:
  BudgetCheckedCaptioner(const ImageTensor& clean, double epsilon) : clean_(clean), epsilon_(epsilon) {}

  std::uint64_t checked = 0, violations = 0;
  double worst = 0;

 protected:
  std::string do_generate(const ImageTensor& image) override {
    const double m = perturbation_stats(image, clean_).mean_abs;
    {
      std::lock_guard lock(mutex_);
      ++checked;
      worst = std::max(worst, m);
      if (m > epsilon_ + 1e-9) ++violations;
    }
    return toy_generate(image);
  }

 private:
  const ImageTensor& clean_;
  double epsilon_;
  std::mutex mutex_;
};

bool monotone_non_increasing(const RunTrace& t) {
  for (std::size_t g = 1; g < t.records.size(); ++g)
    if (t.records[g].best_fitness > t.records[g - 1].best_fitness) return false;
  return true;
}

bool monotone_non_decreasing(const RunTrace& t) {
  for (std::size_t g = 1; g < t.records.size(); ++g)
    if (t.records[g].best_fitness < t.records[g - 1].best_fitness) return false;
  return true;
}

DEConfig fixture_config(std::uint64_t seed) {
  DEConfig c;
  c.np = 40;
  c.f = 0.5;
  c.cr = 0.9;
  c.epsilon = 25;
  c.max_generations = 200;
  c.seed = seed;
  return c;
}

struct FixtureRun {
  bool exact = false;
  int generations = 0;
  double seconds = 0;
  bool monotone = false;
};

std::vector<FixtureRun> fixture_runs(bool masked) {
  const ImageTensor clean = quadrant_fixture(5);
  const std::string target = recolor_first_quadrant(toy_generate(clean), "blue");
  const AttentionHeatmap mask = masked ? quadrant_heatmap(kFixtureSize, kFixtureSize)
                                       : AttentionHeatmap(kFixtureSize, kFixtureSize, 1.0);
  std::vector<FixtureRun> runs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    QuadrantCaptioner gen;
    HashEmbedder emb;
    const auto start = std::chrono::steady_clock::now();
    const AttackResult r = run_attack(clean, target, mask, gen, emb, fixture_config(seed));
    FixtureRun run;
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    run.exact = same_caption(r.final_text, target);
    run.generations = r.generations;
    run.monotone = monotone_non_increasing(r.trace);
    runs.push_back(run);
  }
  return runs;
}

}  // namespace

int main() {
  std::printf("acceptance suite (toy oracles, fixture %dx%d)\n", kFixtureSize, kFixtureSize);

  criterion(1, "metric oracle suite", [] {
    const SynonymLexicon lex = parse_lexicon(kOracleLexicon);
    double worst_sem = 0, worst_bleu = 0;
    std::size_t bad = 0, n = 0;
    for (const auto& c : kMetricCases) {
      ++n;
      const TokenSeq cand = tokenize(c.candidate), ref = tokenize(c.reference);
      const double es = std::abs(s_sem(cand, ref, lex) - c.s_sem);
      const double eb = std::abs(bleu4(cand, {ref}) - c.bleu4);
      worst_sem = std::max(worst_sem, es);
      worst_bleu = std::max(worst_bleu, eb);
      if (es > 1e-9 || eb > 1e-9) ++bad;
    }
    // Worked examples.
    const SynonymLexicon none;
    const double ex1 = s_sem(tokenize("a b c d"), tokenize("a b c d"), none);
    Alignment two;
    two.candidate_words = two.reference_words = 4;
    two.matches = two.chunks = 2;
    const double ex2 = s_sem(two);
    const bool worked = std::abs(ex1 - 0.9921875) <= 1e-9 && std::abs(ex2 - 0.25) <= 1e-9 &&
                        s_sem(tokenize("x"), tokenize("y"), none) == 0.0;
    return Verdict{bad == 0 && n >= 20 && worked,
                   format("%zu pairs, %zu outside 1e-9; max error s_sem %.1e, bleu4 %.1e; worked examples %s", n, bad,
                          worst_sem, worst_bleu, worked ? "ok" : "WRONG")};
  });

  criterion(2, "closed form for identical texts", [] {
    std::string detail;
    bool ok = true;
    for (int m : {1, 2, 4, 8}) {
      TokenSeq t;
      for (int i = 0; i < m; ++i) t.push_back("w" + std::to_string(i));
      const double got = s_sem(t, t, SynonymLexicon{});
      const double want = 1.0 - 0.5 * std::pow(1.0 / m, 3.0);
      ok = ok && got == want;
      detail += format("m=%d %.10f%s ", m, got, got == want ? "" : "(MISMATCH)");
    }
    return Verdict{ok, detail + "(exact equality)"};
  });

  criterion(3, "budget invariant", [] {
    const ImageTensor clean = quadrant_fixture(5);
    const AttentionHeatmap mask = quadrant_heatmap(kFixtureSize, kFixtureSize);
    test::TempDir dir("acceptance");
    std::uint64_t checked = 0, violations = 0;
    double worst = 0, worst_png_gap = 0;
    // The fixture attack, then a run whose target is out of reach so all 200 generations execute.
    const std::vector<std::string> targets = {recolor_first_quadrant(toy_generate(clean), "blue"),
                                              "a photo of a bright green square"};
    for (std::size_t k = 0; k < targets.size(); ++k) {
      BudgetCheckedCaptioner gen(clean, 25);
      HashEmbedder emb;
      const DEConfig c = fixture_config(k);
      const AttackResult r = run_attack(clean, targets[k], mask, gen, emb, c);
      const MetricsReport metrics = eval_report(r.final_text, targets[k], toy_lexicon(), emb, r.stats);
      const auto bundle = dir.path() / ("run" + std::to_string(k));
      write_attack_bundle(bundle, clean, mask, targets[k], r, metrics, c, {});
      const double from_png = perturbation_stats(load_image(bundle / "adversarial.png"), clean).mean_abs;
      const double reported = read_bundle_report(bundle).metrics.stats.mean_abs;
      worst_png_gap = std::max(worst_png_gap, std::abs(from_png - reported));
      checked += gen.checked;
      violations += gen.violations;
      worst = std::max(worst, gen.worst);
    }
    return Verdict{violations == 0 && worst_png_gap <= 0.5 && checked > 8000,
                   format("%llu genomes checked, %llu over budget, max mean_abs %.6f (epsilon 25); "
                          "PNG vs report mean_abs gap %.4f (limit 0.5)",
                          (unsigned long long)checked, (unsigned long long)violations, worst, worst_png_gap)};
  });

  const std::vector<FixtureRun> masked = fixture_runs(true);
  const std::vector<FixtureRun> unmasked = fixture_runs(false);

  criterion(4, "toy targeted attack", [&] {
    int hits = 0, slow = 0;
    double longest = 0;
    std::string gens;
    for (const auto& r : masked) {
      hits += r.exact && r.generations <= 200;
      slow += r.seconds >= 60;
      longest = std::max(longest, r.seconds);
      gens += r.exact ? std::to_string(r.generations) + " " : "- ";
    }
    return Verdict{hits >= 9 && slow == 0,
                   format("%d/10 seeds reached the exact target (need 9); generations per seed: %s; slowest run %.3f s",
                          hits, gens.c_str(), longest)};
  });

  criterion(5, "attention mask convergence", [&] {
    auto gens_to_success = [](const std::vector<FixtureRun>& runs) {
      std::vector<double> g;
      for (const auto& r : runs) g.push_back(r.exact ? r.generations : std::numeric_limits<double>::infinity());
      return g;
    };
    const double med_masked = median(gens_to_success(masked));
    const double med_unmasked = median(gens_to_success(unmasked));
    int monotone = 0;
    for (const auto* runs : {&masked, &unmasked})
      for (const auto& r : *runs) monotone += r.monotone;
    int unmasked_hits = 0;
    for (const auto& r : unmasked) unmasked_hits += r.exact;
    return Verdict{med_masked <= med_unmasked && monotone == 20,
                   format("median generations masked %g vs unmasked %g (unmasked successes %d/10); "
                          "%d/20 best-fitness curves monotone non-increasing",
                          med_masked, med_unmasked, unmasked_hits, monotone)};
  });

  criterion(6, "ask dictionary property", [] {
    const SynonymLexicon lex = toy_lexicon();
    int near_ok = 0, far_ok = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      DEConfig c;
      c.eta = 50;
      c.seed = seed;
      QuadrantCaptioner gen;
      const AskResult near = run_ask(quadrant_fixture(5), "photo", gen, lex, c);
      near_ok += near.dictionary.contains("red") && near.dictionary.contains("blue");
      const AskResult far = run_ask(quadrant_fixture(200), "photo", gen, lex, c);
      far_ok += far.dictionary.contains("red") && !far.dictionary.contains("blue") &&
                !far.dictionary.contains("green");
    }
    return Verdict{near_ok == 10 && far_ok == 10,
                   format("margin 5: %d/10 seeds with red and blue; margin 200: %d/10 seeds with red only "
                          "(eta 50, 200 generations)",
                          near_ok, far_ok)};
  });

  criterion(7, "selection and query accounting", [] {
    const SynonymLexicon lex = toy_lexicon();
    DEConfig c;
    c.np = 4;
    c.max_generations = 3;
    c.seed = 11;
    QuadrantCaptioner gen_a, gen_b;
    const AskResult a = run_ask(quadrant_fixture(5), "photo", gen_a, lex, c);
    const AskResult b = run_ask(quadrant_fixture(5), "photo", gen_b, lex, c);
    const std::uint64_t queries = gen_a.stats().snapshot().generate_queries;

    bool identical = a.trace.records.size() == b.trace.records.size() &&
                     a.trace.final_population.size() == b.trace.final_population.size();
    for (std::size_t g = 0; identical && g < a.trace.records.size(); ++g)
      identical = a.trace.records[g].best_fitness == b.trace.records[g].best_fitness &&
                  a.trace.records[g].mean_fitness == b.trace.records[g].mean_fitness &&
                  a.trace.records[g].queries == b.trace.records[g].queries;
    for (std::size_t j = 0; identical && j < a.trace.final_population.size(); ++j)
      identical = (a.trace.final_population[j].genome.data() == b.trace.final_population[j].genome.data()).all() &&
                  a.trace.final_population[j].output_text == b.trace.final_population[j].output_text;

    // The same accounting for the minimising attack loop (one extra query captions the clean image).
    const ImageTensor clean = quadrant_fixture(5);
    QuadrantCaptioner gen_c;
    HashEmbedder emb;
    const AttackResult r = run_attack(clean, "a photo of a bright green square", quadrant_heatmap(16, 16), gen_c, emb, c);
    const bool attack_ok = r.trace.queries() == 16 && r.queries == 17 && monotone_non_increasing(r.trace);

    const bool ok = queries == 16 && a.trace.queries() == 16 && monotone_non_decreasing(a.trace) && identical &&
                    attack_ok;
    return Verdict{ok, format("ask run issued %llu generate queries (expected 16), best fitness %s, repeat %s; "
                              "attack loop %llu + 1 clean query, %s",
                              (unsigned long long)queries, monotone_non_decreasing(a.trace) ? "monotone" : "NOT monotone",
                              identical ? "bit-identical" : "DIFFERS", (unsigned long long)r.trace.queries(),
                              monotone_non_increasing(r.trace) ? "monotone" : "NOT monotone")};
  });

  criterion(8, "category choice equals exhaustive search", [] {
    std::mt19937_64 rng(2024);
    std::vector<std::string> vocab = {"cat", "dog", "photo", "of", "a", "red", "wine", "traffic", "light",
                                      "square", "green", "mamba", "blue", "bird", "tabby", "golden", "retriever"};
    for (int k = 0; k < 200; ++k) {
      std::string w;
      for (int n = 0, len = 3 + int(rng() % 6); n < len; ++n) w += char('a' + rng() % 26);
      vocab.push_back(w);
    }
    auto phrase = [&](int max_words) {
      std::string s;
      for (int n = 0, len = 1 + int(rng() % max_words); n < len; ++n) s += (n ? " " : "") + vocab[rng() % vocab.size()];
      return s;
    };
    int agree = 0;
    std::size_t largest = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t size = trial == 0 ? 1000 : 1 + rng() % 1000;
      std::vector<std::string> cats(size);
      for (auto& c : cats) c = phrase(3);
      const std::string target = phrase(8);
      largest = std::max(largest, size);

      // Exact argmax over integer token counts, first index on ties.
      const std::size_t best = test::exact_toy_argmax(target, cats);
      HashEmbedder embed;
      agree += choose_category(target, cats, embed) == cats[best];
    }
    return Verdict{agree == 100, format("%d/100 trials agree (largest list %zu)", agree, largest)};
  });

  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
