#include <benchmark/benchmark.h>

#include "mlnc/adam.hpp"
#include "mlnc/autodiff.hpp"
#include "mlnc/backbones.hpp"
#include "mlnc/graph.hpp"
#include "mlnc/synthetic.hpp"

namespace {

using namespace mlnc;

// range(0) = backbone index, range(1) = depth.
void BM_TrainEpoch(benchmark::State& state) {
  const Graph g = generate_synthetic(SyntheticSpec{}, 0);
  const NormalizedAdjacency adj = normalize_adjacency(g);
  const Split split = make_split(g, 0);
  ModelConfig c;
  c.backbone = static_cast<Backbone>(state.range(0));
  c.depth = static_cast<int>(state.range(1));
  Model model = build_model(c, g.num_features(), g.num_labels());
  Adam adam;
  Rng rng(0);
  for (auto _ : state) {
    Tape tape;
    Var l = nn::bce_with_logits(tape, forward(tape, model, g, adj, Mode::kTrain, rng), g.labels(),
                                split.train);
    tape.backward(l);
    adam.step(model.params());
  }
  state.SetLabel(std::string(to_string(c.backbone)) + " K=" + std::to_string(c.depth));
}
BENCHMARK(BM_TrainEpoch)
    ->ArgsProduct({{static_cast<int>(Backbone::kGcn), static_cast<int>(Backbone::kSsgConv),
                    static_cast<int>(Backbone::kGcnii)},
                   {2, 8}})
    ->Unit(benchmark::kMillisecond);

void BM_Inference(benchmark::State& state) {
  const Graph g = generate_synthetic(SyntheticSpec{}, 0);
  const NormalizedAdjacency adj = normalize_adjacency(g);
  ModelConfig c;
  c.backbone = static_cast<Backbone>(state.range(0));
  const Model model = build_model(c, g.num_features(), g.num_labels());
  for (auto _ : state) benchmark::DoNotOptimize(predict_logits(model, g, adj));
  state.SetLabel(std::string(to_string(c.backbone)));
}
BENCHMARK(BM_Inference)
    ->DenseRange(static_cast<int>(Backbone::kGcn), static_cast<int>(Backbone::kGcnii))
    ->Unit(benchmark::kMillisecond);

}  // namespace
