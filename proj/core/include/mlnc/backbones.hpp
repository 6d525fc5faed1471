#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlnc/autodiff.hpp"
#include "mlnc/checkpoint.hpp"
#include "mlnc/graph.hpp"

namespace mlnc {

enum class Backbone { kGcn, kSsgConv, kGcnii };
enum class NormKind { kNone, kBatch, kLayer };

std::string_view to_string(Backbone b);
std::string_view to_string(NormKind n);
Backbone parse_backbone(std::string_view name);
NormKind parse_norm(std::string_view name);

struct ModelConfig {
  Backbone backbone = Backbone::kGcn;
  int depth = 2;
  std::size_t hidden = 64;
  double dropout = 0.5;
  NormKind norm = NormKind::kBatch;
  bool residual = true;
  double ssg_alpha = 0.05;
  double gcnii_alpha = 0.1;
  double gcnii_lambda = 0.5;
  std::uint64_t seed = 0;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline constexpr int kMaxDepth = 10;

// Throws std::invalid_argument naming the offending field.
void validate(const ModelConfig& config);

void to_json(nlohmann::json& j, const ModelConfig& config);
void from_json(const nlohmann::json& j, ModelConfig& config);

// Identity-mapping strength of GCNII layer `layer` (1-based): ln(lambda / layer + 1).
double gcnii_beta(double lambda, int layer);

// Parameter ids follow "<block>.<name>": input_proj.weight, layer{i}.weight,
// layer{i}.bias, layer{i}.res_proj, layer{i}.norm.scale, hop{k}.norm.shift,
// head.weight, head.bias. Running batch-norm statistics are checkpointed as
// "<norm>.running_mean" / "<norm>.running_var".
class Model {
 public:
  struct NormSlot {
    std::size_t scale = 0;
    std::size_t shift = 0;
    RunningStats stats;
  };

  struct Block {
    std::optional<std::size_t> weight;
    std::optional<std::size_t> bias;
    std::optional<std::size_t> res_proj;
    std::optional<NormSlot> norm;
  };

  const ModelConfig& config() const { return config_; }
  std::size_t num_features() const { return num_features_; }
  std::size_t num_labels() const { return num_labels_; }

  std::span<Param> params() { return params_; }
  std::span<const Param> params() const { return params_; }
  Param& param(std::string_view id);
  const Param& param(std::string_view id) const;
  bool has_param(std::string_view id) const;

  const Param& input_proj() const { return params_[input_proj_]; }
  // One block per GCN/GCNII layer or SSGConv hop.
  std::span<const Block> blocks() const { return blocks_; }
  std::span<Block> blocks() { return blocks_; }
  bool has_head() const { return head_weight_.has_value(); }

  std::vector<NamedTensor> state() const;
  // Replaces parameters and running statistics; every id must match in name
  // and shape. Throws CheckpointError otherwise.
  void load_state(const std::vector<NamedTensor>& state);

 private:
  friend Model build_model(const ModelConfig& config, std::size_t num_features,
                           std::size_t num_labels);
  friend Var forward(Tape& tape, Model& model, const Graph& graph,
                     const NormalizedAdjacency& adj, Mode mode, Rng& rng);

  std::size_t add_param(std::string id, Tensor2 value);

  ModelConfig config_;
  std::size_t num_features_ = 0;
  std::size_t num_labels_ = 0;
  std::vector<Param> params_;
  std::size_t input_proj_ = 0;
  std::vector<Block> blocks_;
  std::optional<std::size_t> head_weight_;
  std::optional<std::size_t> head_bias_;
};

// Glorot-uniform weights, zero biases and norm shifts, unit norm scales, all
// drawn from a stream derived from config.seed. GCN's last layer maps h -> C;
// SSGConv and GCNII keep width h and end in a linear head h -> C.
Model build_model(const ModelConfig& config, std::size_t num_features, std::size_t num_labels);

// Tape-level view of one layer's parameters.
struct LayerParams {
  Var weight;
  std::optional<Var> bias;
  std::optional<Var> res_proj;
  std::optional<Var> norm_scale;
  std::optional<Var> norm_shift;
  RunningStats* stats = nullptr;  // batch norm only
};

// Norm(T) according to config.norm; identity when norm is none.
Var apply_norm(Tape& tape, Var x, const LayerParams& p, const ModelConfig& config, Mode mode);

// T = adj * H * W (+ b); with residual T += H (or H * P when widths differ).
// Hidden layers return Dropout(ReLU(Norm(T))); the output layer returns T.
Var gcn_layer(Tape& tape, const NormalizedAdjacency& adj, Var h, const LayerParams& p,
              const ModelConfig& config, bool output_layer, Mode mode, Rng& rng);

// Z = (1 - alpha) adj H + alpha H0 ; U = Z ((1 - beta) I + beta W) [+ H] ;
// returns Dropout(ReLU(Norm(U))). `layer` is 1-based.
Var gcnii_layer(Tape& tape, const NormalizedAdjacency& adj, Var h, Var h0, int layer,
                const LayerParams& p, const ModelConfig& config, Mode mode, Rng& rng);

// Mean over k = 1..K of hop terms (1 - alpha) adj^k H0 + alpha H0 [+ adj^(k-1) H0],
// each passed through Norm then Dropout. `hops` holds one entry per hop.
Var ssg_propagate(Tape& tape, const NormalizedAdjacency& adj, Var h0,
                  std::span<const LayerParams> hops, const ModelConfig& config, Mode mode,
                  Rng& rng);

// Pre-sigmoid logits (N x C). Train mode updates batch-norm running stats and
// draws dropout masks from `rng`; pass a recording tape to backpropagate.
Var forward(Tape& tape, Model& model, const Graph& graph, const NormalizedAdjacency& adj,
            Mode mode, Rng& rng);

// Eval-mode logits without recording gradients.
Tensor2 predict_logits(const Model& model, const Graph& graph, const NormalizedAdjacency& adj);

}  // namespace mlnc
