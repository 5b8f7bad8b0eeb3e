// aaa: command-line driver for the ask / attend / attack / evaluate workflow.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "aaa/ask.hpp"
#include "aaa/attack.hpp"
#include "aaa/attend.hpp"
#include "aaa/bridge.hpp"
#include "aaa/config.hpp"
#include "aaa/fixture.hpp"
#include "aaa/fsutil.hpp"

namespace fs = std::filesystem;
using namespace aaa;

namespace {

enum ExitCode : int { kOk = 0, kConfigError = 1, kOracleError = 2, kBudgetExhausted = 3 };

// --- Oracle endpoints --------------------------------------------------------

struct Endpoint {
  bool toy = true;
  std::string url;
};

/// "toy", "bridge" (address from AAA_BRIDGE_URL) or "bridge:URL".
Endpoint parse_endpoint(const std::string& spec, const std::string& flag) {
  if (spec == "toy") return {};
  if (spec == "bridge") {
    const char* env = std::getenv("AAA_BRIDGE_URL");
    if (!env || !*env) throw ConfigError(flag + " bridge: no URL given and AAA_BRIDGE_URL is unset");
    return {false, env};
  }
  if (spec.rfind("bridge:", 0) == 0 && spec.size() > 7) return {false, spec.substr(7)};
  throw ConfigError(flag + ": expected toy, bridge or bridge:URL, got '" + spec + "'");
}

class Oracles {
 public:
  TextGenerator& generator(const Endpoint& e) {
    if (e.toy) return toy_generator_;
    return bridge(e.url);
  }
  TextEmbedder& embedder(const Endpoint& e) {
    if (e.toy) return toy_embedder_;
    return bridge(e.url);
  }
  HeatmapProvider& heatmaps(const std::string& url) { return bridge(url); }

 private:
  BridgeClient& bridge(const std::string& url) {
    auto& slot = bridges_[url];
    if (!slot) slot = std::make_unique<BridgeClient>(url);
    return *slot;
  }

  QuadrantCaptioner toy_generator_;
  HashEmbedder toy_embedder_;
  std::map<std::string, std::unique_ptr<BridgeClient>> bridges_;
};

SynonymLexicon lexicon_from(const std::string& path) {
  return path.empty() ? toy_lexicon() : load_lexicon(path);
}

// --- DE flags and config precedence ------------------------------------------

struct DEFlags {
  std::string config_path;
  std::optional<int> np, generations, jobs;
  std::optional<double> f, cr, eta, epsilon, target_fitness;
  std::optional<std::uint64_t> seed;
  CLI::Option* force_one_dimension = nullptr;
};

void add_de_flags(CLI::App& cmd, DEFlags& flags) {
  cmd.add_option("--config", flags.config_path, "JSON file with DE settings (flags override it)")
      ->check(CLI::ExistingFile);
  cmd.add_option("--np", flags.np, "population size (default 40)");
  cmd.add_option("--f", flags.f, "mutation scale F (default 0.5)");
  cmd.add_option("--cr", flags.cr, "crossover rate CR (default 0.9)");
  cmd.add_option("--eta", flags.eta, "initial perturbation bound (default 50)");
  cmd.add_option("--epsilon", flags.epsilon, "mean-abs perturbation budget (default 25)");
  cmd.add_option("--generations", flags.generations, "generation limit (default 200)");
  cmd.add_option("--target-fitness", flags.target_fitness, "stop once the fitness crosses this value");
  cmd.add_option("--seed", flags.seed, "RNG seed (default 0)");
  cmd.add_option("--jobs", flags.jobs, "concurrent oracle evaluations (default 1)");
  flags.force_one_dimension =
      cmd.add_flag("--force-one-dimension", "always take one element from the mutant in crossover");
}

/// defaults < config file < flags
DEConfig resolve_config(const DEFlags& flags, DEConfig config) {
  if (!flags.config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file_text(flags.config_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(flags.config_path + ": " + e.what());
    }
    // Accept flag spellings as keys too.
    if (j.is_object()) {
      nlohmann::json normalized = nlohmann::json::object();
      for (auto& [key, value] : j.items()) {
        std::string k = key;
        for (char& ch : k)
          if (ch == '-') ch = '_';
        normalized[k] = value;
      }
      j = normalized;
    }
    apply_config_json(config, j);
  }
  if (flags.np) config.np = *flags.np;
  if (flags.f) config.f = *flags.f;
  if (flags.cr) config.cr = *flags.cr;
  if (flags.eta) config.eta = *flags.eta;
  if (flags.epsilon) config.epsilon = *flags.epsilon;
  if (flags.generations) config.max_generations = *flags.generations;
  if (flags.target_fitness) config.target_fitness = *flags.target_fitness;
  if (flags.seed) config.seed = *flags.seed;
  if (flags.jobs) config.jobs = *flags.jobs;
  if (flags.force_one_dimension->count()) config.force_one_dimension = true;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return config;
}

// --- Commands ----------------------------------------------------------------

struct AskArgs {
  std::string image, semantics, oracle = "toy", lexicon, out = "dictionary.tsv", trace;
  bool harvest_initial = false;
  DEFlags de;
};

int run_ask_command(const AskArgs& a) {
  Oracles oracles;
  const ImageTensor clean = load_image(a.image);
  const SynonymLexicon lexicon = lexicon_from(a.lexicon);
  TextGenerator& generator = oracles.generator(parse_endpoint(a.oracle, "--oracle"));
  const DEConfig config = resolve_config(a.de, DEConfig{});

  AskOptions options;
  options.harvest_initial = a.harvest_initial;
  const AskResult r = run_ask(clean, a.semantics, generator, lexicon, config, options);

  const fs::path trace_path = a.trace.empty() ? fs::path(a.out).replace_extension(".trace.json") : fs::path(a.trace);
  write_file_atomic(a.out, r.dictionary.to_tsv());
  nlohmann::json trace = trace_to_json(r.trace);
  trace["semantics"] = a.semantics;
  trace["config"] = config_to_json(config);
  write_file_atomic(trace_path, trace.dump(2) + "\n");
  std::cerr << "ask: " << r.dictionary.size() << " dictionary entries after " << r.trace.generations()
            << " generations, " << r.trace.queries() << " queries -> " << a.out << "\n";
  return kOk;
}

struct AttendArgs {
  std::string image, target_text, source, categories, embed = "toy", out = "heatmap.aah";
};

int run_attend_command(const AttendArgs& a) {
  Oracles oracles;
  const ImageTensor image = load_image(a.image);
  if (!a.categories.empty()) {
    const auto names = load_categories(a.categories);
    TextEmbedder& embedder = oracles.embedder(parse_endpoint(a.embed, "--embed"));
    const std::string chosen = choose_category(a.target_text, names, embedder);
    std::cerr << "category: " << chosen << "\n";
  }

  HeatmapSource source;
  if (a.source.rfind("file:", 0) == 0) {
    source = fs::path(a.source.substr(5));
  } else {
    const Endpoint e = parse_endpoint(a.source, "--source");
    if (e.toy) throw ConfigError("--source: expected file:PATH, bridge or bridge:URL");
    source = std::ref(oracles.heatmaps(e.url));
  }
  const AttentionHeatmap h = fetch_heatmap(image, a.target_text, source, &std::cerr);
  save_heatmap(a.out, h);
  return kOk;
}

struct AttackArgs {
  std::string image, target_text, heatmap, oracle = "toy", embed = "toy", lexicon, out;
  bool remask = false;
  DEFlags de;
};

int run_attack_command(const AttackArgs& a) {
  Oracles oracles;
  const ImageTensor clean = load_image(a.image);
  const SynonymLexicon lexicon = lexicon_from(a.lexicon);
  const Endpoint embed_endpoint = parse_endpoint(a.embed, "--embed");
  TextGenerator& generator = oracles.generator(parse_endpoint(a.oracle, "--oracle"));
  TextEmbedder& embedder = oracles.embedder(embed_endpoint);

  AttentionHeatmap heatmap(clean.width(), clean.height(), 1.0);
  if (a.heatmap.empty())
    std::cerr << "no --heatmap given, perturbing every pixel\n";
  else
    heatmap = fetch_heatmap(clean, a.target_text, fs::path(a.heatmap), &std::cerr);

  DEConfig defaults;
  // The toy embedder puts a one-word change well inside 0.05, so only exact
  // caption matches count there.
  if (!embed_endpoint.toy) defaults.target_fitness = 0.05;
  const DEConfig config = resolve_config(a.de, defaults);

  AttackOptions options;
  options.remask_each_generation = a.remask;
  options.log = &std::cerr;
  const AttackResult r = run_attack(clean, a.target_text, heatmap, generator, embedder, config, options);
  const MetricsReport metrics = eval_report(r.final_text, a.target_text, lexicon, embedder, r.stats);
  write_attack_bundle(a.out, clean, heatmap, a.target_text, r, metrics, config, options);
  std::cerr << "mean_abs " << r.stats.mean_abs << " (epsilon " << config.epsilon << "), bundle written to " << a.out
            << "\n";
  return r.success ? kOk : kBudgetExhausted;
}

struct EvaluateArgs {
  std::string adv_text, bundle, target_text, lexicon, embed = "toy";
};

int run_evaluate_command(const EvaluateArgs& a) {
  Oracles oracles;
  const SynonymLexicon lexicon = lexicon_from(a.lexicon);
  TextEmbedder& embedder = oracles.embedder(parse_endpoint(a.embed, "--embed"));

  std::string adv_text = a.adv_text, target_text = a.target_text;
  std::optional<PerturbationStats> stats;
  if (!a.bundle.empty()) {
    const BundleInfo info = read_bundle_report(a.bundle);
    adv_text = info.final_text;
    if (target_text.empty()) target_text = info.target_text;
    stats = perturbation_stats(load_image(fs::path(a.bundle) / "adversarial.png"),
                               load_image(fs::path(a.bundle) / "clean.png"));
  }
  if (target_text.empty()) throw ConfigError("--target-text is required without --bundle");

  const MetricsReport m = eval_report(adv_text, target_text, lexicon, embedder, stats.value_or(PerturbationStats{}));
  nlohmann::json report = {{"adv_text", adv_text},
                           {"target_text", target_text},
                           {"s_sem", m.s_sem},
                           {"bleu4", m.bleu4},
                           {"clip_score", m.clip_score},
                           {"degenerate_embedding", m.degenerate_embedding}};
  if (stats) {
    report["mean_abs"] = stats->mean_abs;
    report["max_abs"] = stats->max_abs;
    report["num_changed"] = stats->num_changed;
  }
  std::cout << report.dump(2) << std::endl;
  return kOk;
}

struct FixtureArgs {
  std::string out;
  double margin = 5;
  int size = kFixtureSize;
  std::string color = "blue";
};

int run_fixture_command(const FixtureArgs& a) {
  if (a.size < 2) throw ConfigError("--size must be at least 2");
  const ImageTensor clean = quadrant_fixture(a.margin, a.size);
  const std::string target = recolor_first_quadrant(toy_generate(clean), a.color);
  fs::create_directories(a.out);
  save_image(fs::path(a.out) / "clean.png", clean);
  save_heatmap(fs::path(a.out) / "heatmap.aah", quadrant_heatmap(a.size, a.size));
  write_file_atomic(fs::path(a.out) / "target.txt", target + "\n");
  std::cout << target << std::endl;
  return kOk;
}

// --- Error classification ----------------------------------------------------

int report_error(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const RunAborted& e) {
    std::cerr << "run aborted after " << e.partial_trace().generations() << " generations\n";
    if (e.cause()) return report_error(e.cause());
    std::cerr << "error: " << e.what() << "\n";
    return kOracleError;
  } catch (const OracleError& e) {
    std::cerr << "oracle error: " << e.what() << "\n";
    return kOracleError;
  } catch (const std::exception& e) {
    try {
      std::rethrow_if_nested(e);
    } catch (...) {
      std::cerr << e.what() << "\n";
      return report_error(std::current_exception());
    }
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-based targeted attacks on image-to-text models"};
  app.require_subcommand(1);
  std::function<int()> command;

  AskArgs ask;
  auto* ask_cmd = app.add_subcommand("ask", "search for words the victim can be steered toward");
  ask_cmd->add_option("--image", ask.image, "clean image (8-bit RGB PNG)")->required()->check(CLI::ExistingFile);
  ask_cmd->add_option("--semantics", ask.semantics, "attacker semantics TS")->required();
  ask_cmd->add_option("--oracle", ask.oracle, "toy | bridge | bridge:URL")->capture_default_str();
  ask_cmd->add_option("--lexicon", ask.lexicon, "synonym lexicon TSV (default: built-in toy lexicon)")
      ->check(CLI::ExistingFile);
  ask_cmd->add_option("--out", ask.out, "dictionary TSV")->capture_default_str();
  ask_cmd->add_option("--trace", ask.trace, "trace JSON (default: next to --out)");
  ask_cmd->add_flag("--harvest-initial", ask.harvest_initial, "also harvest the initial population");
  add_de_flags(*ask_cmd, ask.de);
  ask_cmd->callback([&] { command = [&] { return run_ask_command(ask); }; });

  AttendArgs attend;
  auto* attend_cmd = app.add_subcommand("attend", "obtain the attention heatmap for a target text");
  attend_cmd->add_option("--image", attend.image, "clean image")->required()->check(CLI::ExistingFile);
  attend_cmd->add_option("--target-text", attend.target_text, "target caption")->required();
  attend_cmd->add_option("--source", attend.source, "file:PATH | bridge | bridge:URL")->required();
  attend_cmd->add_option("--categories", attend.categories, "category list, one per line")
      ->check(CLI::ExistingFile);
  attend_cmd->add_option("--embed", attend.embed, "toy | bridge | bridge:URL")->capture_default_str();
  attend_cmd->add_option("--out", attend.out, "heatmap output (AAH1)")->capture_default_str();
  attend_cmd->callback([&] { command = [&] { return run_attend_command(attend); }; });

  AttackArgs attack;
  auto* attack_cmd = app.add_subcommand("attack", "heatmap-masked search for the target caption");
  attack_cmd->add_option("--image", attack.image, "clean image")->required()->check(CLI::ExistingFile);
  attack_cmd->add_option("--target-text", attack.target_text, "target caption")->required();
  attack_cmd->add_option("--heatmap", attack.heatmap, "AAH1 heatmap (default: uniform)");
  attack_cmd->add_option("--oracle", attack.oracle, "toy | bridge | bridge:URL")->capture_default_str();
  attack_cmd->add_option("--embed", attack.embed, "toy | bridge | bridge:URL")->capture_default_str();
  attack_cmd->add_option("--lexicon", attack.lexicon, "synonym lexicon TSV for the report")
      ->check(CLI::ExistingFile);
  attack_cmd->add_option("--out", attack.out, "result bundle directory")->required();
  attack_cmd->add_flag("--remask", attack.remask, "re-apply the heatmap bound every generation");
  add_de_flags(*attack_cmd, attack.de);
  attack_cmd->callback([&] { command = [&] { return run_attack_command(attack); }; });

  EvaluateArgs evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "score an adversarial caption against the target");
  auto* adv_opt = eval_cmd->add_option("--adv-text", evaluate.adv_text, "adversarial caption");
  auto* bundle_opt = eval_cmd->add_option("--bundle", evaluate.bundle, "attack result directory")
                         ->check(CLI::ExistingDirectory);
  adv_opt->excludes(bundle_opt);
  eval_cmd->add_option("--target-text", evaluate.target_text, "target caption (default: from the bundle)");
  eval_cmd->add_option("--lexicon", evaluate.lexicon, "synonym lexicon TSV")->check(CLI::ExistingFile);
  eval_cmd->add_option("--embed", evaluate.embed, "toy | bridge | bridge:URL")->capture_default_str();
  eval_cmd->callback([&] {
    if (!adv_opt->count() && !bundle_opt->count()) throw CLI::RequiredError("--adv-text or --bundle");
    command = [&] { return run_evaluate_command(evaluate); };
  });

  FixtureArgs fixture;
  auto* fixture_cmd = app.add_subcommand("fixture", "write the toy quadrant fixture");
  fixture_cmd->add_option("--out", fixture.out, "output directory")->required();
  fixture_cmd->add_option("--margin", fixture.margin, "quadrant-0 red minus blue")->capture_default_str();
  fixture_cmd->add_option("--size", fixture.size, "image side in pixels")->capture_default_str();
  fixture_cmd->add_option("--color", fixture.color, "target colour for quadrant 0")->capture_default_str();
  fixture_cmd->callback([&] { command = [&] { return run_fixture_command(fixture); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc == 0) return kOk;
    const auto parsed = app.get_subcommands();
    std::cerr << (parsed.empty() ? app.help() : parsed.front()->help());
    return kConfigError;
  }

  try {
    return command();
  } catch (...) {
    return report_error(std::current_exception());
  }
}
