#include "mlnc/synthetic.hpp"

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlnc/rng.hpp"

namespace mlnc {

void validate(const SyntheticSpec& s) {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument(std::string("synthetic: ") + name + " must be in [0, 1], got " +
                                  std::to_string(p));
    }
  };
  if (s.num_nodes == 0) throw std::invalid_argument("synthetic: num_nodes must be positive");
  if (s.num_labels == 0) throw std::invalid_argument("synthetic: num_labels must be positive");
  if (s.num_features == 0) throw std::invalid_argument("synthetic: num_features must be positive");
  prob(s.prevalence, "prevalence");
  prob(s.p_intra, "p_intra");
  prob(s.p_inter, "p_inter");
  if (s.prevalence == 0.0) throw std::invalid_argument("synthetic: prevalence must be positive");
  if (s.p_inter > s.p_intra) {
    throw std::invalid_argument("synthetic: p_inter must not exceed p_intra");
  }
  if (!(s.noise >= 0.0)) throw std::invalid_argument("synthetic: noise must be non-negative");
}

Graph generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  validate(spec);
  const std::size_t n = spec.num_nodes;
  const std::size_t c = spec.num_labels;

  Rng label_rng = make_rng(seed, "synthetic.labels");
  std::bernoulli_distribution has_label(spec.prevalence);
  Tensor2 labels(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    while (!any) {
      for (std::size_t k = 0; k < c; ++k) {
        const bool on = has_label(label_rng);
        labels(i, k) = on ? 1.0 : 0.0;
        any = any || on;
      }
    }
  }

  Rng edge_rng = make_rng(seed, "synthetic.edges");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      bool shared = false;
      for (std::size_t k = 0; k < c && !shared; ++k) shared = labels(i, k) > 0 && labels(j, k) > 0;
      if (unit(edge_rng) < (shared ? spec.p_intra : spec.p_inter)) {
        edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
      }
    }
  }

  Rng feature_rng = make_rng(seed, "synthetic.features");
  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor2 features(n, spec.num_features);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < spec.num_features; ++j) {
      const double noise = spec.noise > 0 ? spec.noise * gauss(feature_rng) : 0.0;
      features(i, j) = labels(i, j % c) + noise;
    }
  }
  return Graph::from_edges(n, edges, std::move(features), std::move(labels));
}

void to_json(nlohmann::json& j, const SyntheticSpec& s) {
  j = {{"num_nodes", s.num_nodes}, {"num_labels", s.num_labels},
       {"num_features", s.num_features}, {"prevalence", s.prevalence},
       {"p_intra", s.p_intra}, {"p_inter", s.p_inter}, {"noise", s.noise}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& s) {
  SyntheticSpec d;
  s.num_nodes = j.value("num_nodes", d.num_nodes);
  s.num_labels = j.value("num_labels", d.num_labels);
  s.num_features = j.value("num_features", d.num_features);
  s.prevalence = j.value("prevalence", d.prevalence);
  s.p_intra = j.value("p_intra", d.p_intra);
  s.p_inter = j.value("p_inter", d.p_inter);
  s.noise = j.value("noise", d.noise);
}

}  // namespace mlnc
