#include <doctest.h>

#include <mutex>
#include <sstream>

#include "aaa/attack.hpp"
#include "aaa/fixture.hpp"
#include "test_support.hpp"

using namespace aaa;

namespace {

DEConfig attack_config(std::uint64_t seed) {
  DEConfig c;
  c.seed = seed;
  c.epsilon = 25;
  return c;
}

std::string blue_target(const ImageTensor& clean) { return recolor_first_quadrant(toy_generate(clean), "blue"); }

/// Remembers the largest mean-abs perturbation it was asked to caption.
class BudgetWatcher final : public TextGenerator {
 public:
  explicit BudgetWatcher(const ImageTensor& clean) : clean_(clean) {}
  double worst = 0;

 protected:
  std::string do_generate(const ImageTensor& image) override {
    const double m = perturbation_stats(image, clean_).mean_abs;
    std::lock_guard lock(mutex_);
    worst = std::max(worst, m);
    return toy_generate(image);
  }

 private:
  const ImageTensor& clean_;
  std::mutex mutex_;
};

}  // namespace

TEST_CASE("same_caption") {
  CHECK(same_caption("a photo , of", "A photo of"));
  CHECK_FALSE(same_caption("a photo", "a photo of"));
}

TEST_CASE("fixture helpers") {
  const ImageTensor f = quadrant_fixture(5);
  CHECK(f.width() == kFixtureSize);
  CHECK(f(0, 0, 0) == 130);
  CHECK(f(0, 0, 2) == 125);
  CHECK(f(kFixtureSize - 1, kFixtureSize - 1, 0) == 200);
  CHECK(quadrant_fixture(200)(0, 0, 0) == 255);
  CHECK(quadrant_fixture(200)(0, 0, 2) == 55);
  const std::string clean = toy_generate(f);
  CHECK(clean == "a photo of a dark red square , a dark red square , a dark red square and a dark red square");
  CHECK(blue_target(f) == "a photo of a dark blue square , a dark red square , a dark red square and a dark red square");
}

TEST_CASE("run_attack") {
  QuadrantCaptioner gen;
  HashEmbedder emb;
  const ImageTensor clean = quadrant_fixture(5);
  const AttentionHeatmap mask = quadrant_heatmap(kFixtureSize, kFixtureSize);

  SUBCASE("target equal to the clean caption succeeds immediately") {
    const AttackResult r = run_attack(clean, toy_generate(clean), mask, gen, emb, attack_config(1));
    CHECK(r.success);
    CHECK(r.generations == 0);
    CHECK(r.queries == 1);
    CHECK(r.stats.mean_abs == 0.0);
    CHECK(r.stats.num_changed == 0);
    CHECK(r.final_s_clip == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("toy fixture flips quadrant 0 to blue within budget") {
    std::ostringstream log;
    AttackOptions opts;
    opts.log = &log;
    const std::string target = blue_target(clean);
    const AttackResult r = run_attack(clean, target, mask, gen, emb, attack_config(3), opts);
    CHECK(r.success);
    CHECK(same_caption(r.final_text, target));
    CHECK(toy_generate(r.adversarial) == r.final_text);
    CHECK(r.clean_text == toy_generate(clean));
    CHECK(r.stats.mean_abs <= 25 + 1e-9);
    CHECK(r.stats.mean_abs == perturbation_stats(r.adversarial, clean).mean_abs);
    CHECK(r.queries == r.trace.queries() + 1);
    CHECK(r.generations <= 200);
    CHECK(log.str().find("success") != std::string::npos);
    for (std::size_t g = 1; g < r.trace.records.size(); ++g)
      CHECK(r.trace.records[g].best_fitness <= r.trace.records[g - 1].best_fitness);
    CHECK(r.final_s_clip <= r.trace.records.front().best_fitness);
    // Repeated captions hit the cache: at most one embed per distinct text plus the target.
    CHECK(r.embed_queries < r.queries);
  }
  SUBCASE("final distance never exceeds any initial individual's") {
    DEConfig c = attack_config(5);
    c.max_generations = 3;
    // Unreachable target so the run uses its whole budget.
    const AttackResult r = run_attack(clean, "a photo of a bright green square", mask, gen, emb, c);
    CHECK_FALSE(r.success);
    CHECK(r.generations == 3);
    Rng rng(c.seed);
    const AttentionHeatmap fitted = fit_to_image(mask, clean);
    const EmbeddingVec target = toy_embed("a photo of a bright green square");
    for (const auto& ind : init_masked(clean, fitted, c, rng))
      CHECK(r.final_s_clip <= s_clip(toy_embed(toy_generate(ind.genome)), target) + 1e-12);
  }
  SUBCASE("tiny budget cannot flip the colour") {
    DEConfig c = attack_config(1);
    c.epsilon = 0.001;
    c.max_generations = 20;
    const AttackResult r = run_attack(clean, blue_target(clean), mask, gen, emb, c);
    CHECK_FALSE(r.success);
    CHECK(r.generations == 20);
    CHECK(r.stats.mean_abs <= 0.001 + 1e-12);
  }
  SUBCASE("every captioned genome respects epsilon") {
    BudgetWatcher watcher(clean);
    DEConfig c = attack_config(2);
    c.epsilon = 4;
    c.eta = 200;
    c.max_generations = 30;
    run_attack(clean, "a photo of a bright green square", AttentionHeatmap(2, 2, 1.0), watcher, emb, c);
    CHECK(watcher.worst > 0);
    CHECK(watcher.worst <= 4 + 1e-9);
  }
  SUBCASE("remask keeps zero-attention pixels at their clean values") {
    AttackOptions opts;
    opts.remask_each_generation = true;
    DEConfig c = attack_config(4);
    c.max_generations = 15;
    const AttentionHeatmap hard = quadrant_heatmap(kFixtureSize, kFixtureSize, 1.0, 0.0);
    const AttackResult r = run_attack(clean, "a photo of a bright green square", hard, gen, emb, c, opts);
    const Eigen::ArrayXd bound = per_element_mask(hard) * c.eta;
    CHECK(((r.trace.best.genome.data() - clean.data()).abs() <= bound + 1e-9).all());
    for (const auto& ind : r.trace.final_population)
      CHECK(((ind.genome.data() - clean.data()).abs() <= bound + 1e-9).all());
  }
  SUBCASE("zero heatmap warns and still runs") {
    std::ostringstream log;
    AttackOptions opts;
    opts.log = &log;
    DEConfig c = attack_config(1);
    c.max_generations = 2;
    run_attack(clean, blue_target(clean), AttentionHeatmap(4, 4, 0.0), gen, emb, c, opts);
    CHECK(log.str().find("warning") != std::string::npos);
  }
  SUBCASE("target fitness threshold counts as success") {
    DEConfig c = attack_config(1);
    c.max_generations = 5;
    c.target_fitness = 0.5;
    // Distance from the clean caption to this target is well under 0.5.
    const AttackResult r = run_attack(clean, "a photo of a dark red square", mask, gen, emb, c);
    CHECK(r.success);
    CHECK(r.generations == 0);
  }
  SUBCASE("empty target") {
    CHECK_THROWS_AS(run_attack(clean, " ", mask, gen, emb, attack_config(1)), std::invalid_argument);
  }
}

TEST_CASE("attack bundle") {
  QuadrantCaptioner gen;
  HashEmbedder emb;
  const ImageTensor clean = quadrant_fixture(5);
  const AttentionHeatmap mask = quadrant_heatmap(kFixtureSize, kFixtureSize);
  const std::string target = blue_target(clean);
  const DEConfig c = attack_config(3);
  const AttackResult r = run_attack(clean, target, mask, gen, emb, c);
  const MetricsReport metrics = eval_report(r.final_text, target, toy_lexicon(), emb, r.stats);

  test::TempDir dir("bundle");
  write_attack_bundle(dir.path() / "out", clean, mask, target, r, metrics, c, {});
  for (const char* name : {"adversarial.png", "clean.png", "heatmap.aah", "report.json"})
    CHECK(std::filesystem::exists(dir.path() / "out" / name));

  const BundleInfo info = read_bundle_report(dir.path() / "out");
  CHECK(info.target_text == target);
  CHECK(info.final_text == r.final_text);
  CHECK(info.success == r.success);
  CHECK(info.queries == r.queries);
  CHECK(info.generations == r.generations);
  CHECK(info.metrics.s_sem == metrics.s_sem);
  CHECK(info.metrics.stats.mean_abs == r.stats.mean_abs);

  const ImageTensor saved = load_image(dir.path() / "out" / "adversarial.png");
  CHECK(std::abs(perturbation_stats(saved, clean).mean_abs - r.stats.mean_abs) <= 0.5);
  CHECK((load_image(dir.path() / "out" / "clean.png").data() == clean.data()).all());
  CHECK((load_heatmap(dir.path() / "out" / "heatmap.aah").values() - mask.values()).abs().maxCoeff() < 1e-7);

  CHECK_THROWS_AS(read_bundle_report(dir.path()), std::exception);
}
