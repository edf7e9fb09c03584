// Train the LO-feature decision tree on one scenario and classify a few
// fresh feature vectors.

#include <cstdio>

#include "cvqkd/cvqkd.hpp"

int main() {
  using namespace cvqkd;
  const AttackScenario scenario = AttackScenario::figure3('c');
  const DatasetSplit split = generate_dataset(scenario, 2024);
  const DecisionTree tree = train_tree(split.train);
  const ConfusionMatrix cm = evaluate(tree, split.test);
  std::printf("%s: accuracy %.4f, depth %d, %zu leaves\n", scenario.name.c_str(), cm.accuracy(),
              tree.depth(), tree.leaf_count());

  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const auto samples = sample_transmittance(scenario.configs[k], scenario.loss_db_per_km,
                                              scenario.samples_per_vector, 99, k);
    const FeatureVector f = extract_features(samples);
    std::printf("true %-6s  E[T] = %.5f  E[sqrt T] = %.5f  -> %s\n",
                std::string(to_string(static_cast<AttackKind>(k))).c_str(), f.e_t, f.e_sqrt_t,
                std::string(to_string(tree.predict(f))).c_str());
  }
}
