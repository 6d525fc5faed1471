#pragma once

#include <cstddef>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "mlnc/graph.hpp"

namespace mlnc {

// Planted multi-label graph. Each node draws every label independently with
// probability `prevalence` (redrawn while empty). A pair of nodes is linked
// with probability `p_intra` when their label sets intersect, `p_inter`
// otherwise. Feature j is label (j mod C) plus N(0, noise^2).
struct SyntheticSpec {
  std::size_t num_nodes = 600;
  std::size_t num_labels = 6;
  std::size_t num_features = 16;
  double prevalence = 0.3;
  double p_intra = 0.05;
  double p_inter = 0.005;
  double noise = 1.0;

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

// Throws std::invalid_argument on out-of-range sizes or probabilities.
void validate(const SyntheticSpec& spec);

Graph generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

void to_json(nlohmann::json& j, const SyntheticSpec& spec);
void from_json(const nlohmann::json& j, SyntheticSpec& spec);

}  // namespace mlnc
