// Command-line driver: dataset simulation, attack classification, key-rate
// sweeps and attack-frequency curves.
//
// Exit codes: 0 success, 1 invalid configuration, 2 numerical failure,
// 3 I/O failure.

#include <CLI11.hpp>

#include <array>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "cvqkd/cvqkd.hpp"
#include "cvqkd/manifest.hpp"

namespace fs = std::filesystem;
using namespace cvqkd;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string figure;
  unsigned threads = 1;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "RNG seed (overrides [run] seed)");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--figure", o.figure, "figure preset: 3a 3b 3c 3d 4 5 6 appendix-d");
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1u, 256u))->capture_default_str();
}

ExperimentManifest build_manifest(const CommonOptions& o) {
  ExperimentManifest m;
  if (!o.config.empty()) {
    m = load_manifest_file(o.config, o.figure);
  } else if (!o.figure.empty()) {
    m = figure_preset(o.figure);
  }
  if (o.seed) m.seed = *o.seed;
  m.validate();
  return m;
}

void log_written(const fs::path& p) { std::cerr << "wrote " << p.string() << '\n'; }

void cmd_simulate(const CommonOptions& o) {
  const ExperimentManifest m = build_manifest(o);
  const AttackScenario sc = m.scenario();
  const OutputWriter out(o.out, m);

  log_written(out.csv("transmittance_samples.csv", [&](std::ostream& os) {
    os << "class,sample,t\n";
    os.precision(17);
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      const auto s = sample_transmittance(sc.configs[k], sc.loss_db_per_km, sc.samples_per_vector,
                                          m.seed, k * sc.vectors_per_class);
      for (std::size_t i = 0; i < s.count(); ++i)
        os << to_string(static_cast<AttackKind>(k)) << ',' << i << ',' << s.values[i] << '\n';
    }
  }));

  const DatasetSplit split = generate_dataset(sc, m.seed, o.threads);
  log_written(out.csv("dataset_train.csv", [&](std::ostream& os) { write_dataset_csv(os, split.train); }));
  log_written(out.csv("dataset_test.csv", [&](std::ostream& os) { write_dataset_csv(os, split.test); }));
  log_written(out.json("simulate.json", {{"train_size", split.train.size()},
                                         {"test_size", split.test.size()}}));
}

void cmd_classify(const CommonOptions& o) {
  const ExperimentManifest m = build_manifest(o);
  const AttackScenario sc = m.scenario();
  const DatasetSplit split = generate_dataset(sc, m.seed, o.threads);
  const DecisionTree tree = train_tree(split.train, m.classifier.tree);
  const ConfusionMatrix cm = evaluate(tree, split.test);
  const OutputWriter out(o.out, m);

  log_written(out.csv("confusion_matrix.csv", [&](std::ostream& os) {
    os << "true\\predicted";
    for (std::size_t j = 0; j < kNumClasses; ++j) os << ',' << to_string(static_cast<AttackKind>(j));
    os << '\n';
    for (std::size_t i = 0; i < kNumClasses; ++i) {
      os << to_string(static_cast<AttackKind>(i));
      for (std::size_t j = 0; j < kNumClasses; ++j) os << ',' << cm.counts[i][j];
      os << '\n';
    }
  }));
  nlohmann::json per_class = nlohmann::json::array();
  log_written(out.csv("class_report.csv", [&](std::ostream& os) {
    os << "class,precision,recall\n";
    os.precision(17);
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      const auto kind = static_cast<AttackKind>(k);
      os << to_string(kind) << ',' << cm.precision(kind) << ',' << cm.recall(kind) << '\n';
      per_class.push_back({{"class", std::string(to_string(kind))},
                           {"precision", cm.precision(kind)},
                           {"recall", cm.recall(kind)}});
    }
  }));
  log_written(out.text("tree.txt", tree.dump()));
  log_written(out.json("classify.json", {{"accuracy", cm.accuracy()},
                                         {"confusion_matrix", cm.counts},
                                         {"classes", per_class},
                                         {"tree_depth", tree.depth()},
                                         {"tree_leaves", tree.leaf_count()}}));
  std::cout << "accuracy " << cm.accuracy() << '\n';
}

void cmd_sweep(const CommonOptions& o) {
  const ExperimentManifest m = build_manifest(o);
  const ImprovementMap map = improvement_map(m.grid(), o.threads);
  const OutputWriter out(o.out, m);
  log_written(out.csv("improvement_map.csv", [&](std::ostream& os) { write_map_csv(os, map); }));
  const MitigationResult& best = map.max_improvement();
  const MitigationResult& worst = map.min_raw_improvement();
  log_written(out.json("sweep.json", {{"rows", map.rows()},
                                      {"cols", map.cols()},
                                      {"d_eve_values", map.grid.d_eve_values},
                                      {"sigma_values", map.grid.sigma_values},
                                      {"max_improvement", best.improvement},
                                      {"max_improvement_at", {best.d_eve_km, best.sigma_rin_lo}},
                                      {"min_raw_improvement", worst.raw_improvement()},
                                      {"min_raw_improvement_at", {worst.d_eve_km, worst.sigma_rin_lo}}}));
  std::cout << "max improvement " << best.improvement << " at D_Eve=" << best.d_eve_km
            << " km, sigma=" << best.sigma_rin_lo << '\n';
}

void cmd_frequency(const CommonOptions& o) {
  ExperimentManifest m = build_manifest(o);
  SweepGrid settings = SweepGrid::standard(m.sweep.attack, 1, 1);
  settings.link = m.link;
  settings.finite = m.finite_or_none();
  settings.loss_prime_db_per_km = m.sweep.loss_prime_db_per_km;
  settings.misclassification = {m.sweep.false_negative, m.sweep.false_positive};
  settings.va_range = {m.sweep.v_a_lo, m.sweep.v_a_hi};
  const FrequencyCurve curve =
      frequency_sweep(settings, m.frequency.d_eve_km, m.frequency.sigma_rin_lo, m.f_values());
  const OutputWriter out(o.out, m);
  log_written(out.csv("frequency.csv", [&](std::ostream& os) { write_frequency_csv(os, curve); }));
  nlohmann::json payload{{"k0", curve.k0}, {"v_a_opt", curve.v_a_opt}};
  if (const auto w = zero_key_window(curve)) {
    payload["zero_key_window"] = {w->first, w->second};
    std::cout << "K_Attack = 0 for f in [" << w->first << ", " << w->second << "]\n";
  } else {
    payload["zero_key_window"] = nullptr;
    std::cout << "K_Attack > 0 for all sampled f\n";
  }
  log_written(out.json("frequency.json", payload));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Channel-tampering attacks on CV-QKD: detection and post-selection"};
  app.require_subcommand(1);
  std::array<CommonOptions, 4> opts;
  auto* sim = app.add_subcommand("simulate", "LO transmittance samples and feature datasets");
  auto* cls = app.add_subcommand("classify", "train and evaluate the decision tree");
  auto* swp = app.add_subcommand("sweep", "key-rate improvement map over (D_Eve, sigma)");
  auto* frq = app.add_subcommand("frequency", "key rate against attack frequency");
  add_common(sim, opts[0]);
  add_common(cls, opts[1]);
  add_common(swp, opts[2]);
  add_common(frq, opts[3]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*sim) cmd_simulate(opts[0]);
    if (*cls) cmd_classify(opts[1]);
    if (*swp) cmd_sweep(opts[2]);
    if (*frq) cmd_frequency(opts[3]);
  } catch (const invalid_input& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return 1;
  } catch (const io_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const numerical_domain_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const estimation_failure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
