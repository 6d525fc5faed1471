#include "mlnc/backbones.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "mlnc/rng.hpp"

namespace mlnc {

std::string_view to_string(Backbone b) {
  switch (b) {
    case Backbone::kGcn: return "gcn";
    case Backbone::kSsgConv: return "ssgconv";
    case Backbone::kGcnii: return "gcnii";
  }
  return "?";
}

std::string_view to_string(NormKind n) {
  switch (n) {
    case NormKind::kNone: return "none";
    case NormKind::kBatch: return "batch";
    case NormKind::kLayer: return "layer";
  }
  return "?";
}

Backbone parse_backbone(std::string_view name) {
  if (name == "gcn") return Backbone::kGcn;
  if (name == "ssgconv") return Backbone::kSsgConv;
  if (name == "gcnii") return Backbone::kGcnii;
  throw std::invalid_argument("unknown backbone '" + std::string(name) +
                              "' (expected gcn, ssgconv or gcnii)");
}

NormKind parse_norm(std::string_view name) {
  if (name == "none") return NormKind::kNone;
  if (name == "batch") return NormKind::kBatch;
  if (name == "layer") return NormKind::kLayer;
  throw std::invalid_argument("unknown norm '" + std::string(name) +
                              "' (expected none, batch or layer)");
}

void validate(const ModelConfig& c) {
  auto bad = [](const std::string& what) { throw std::invalid_argument("model." + what); };
  if (c.depth < 1 || c.depth > kMaxDepth) bad("depth must be in [1, 10], got " + std::to_string(c.depth));
  if (c.hidden < 1) bad("hidden must be positive");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) bad("dropout must be in [0, 1), got " + std::to_string(c.dropout));
  if (!(c.ssg_alpha >= 0.0 && c.ssg_alpha <= 1.0)) bad("ssg_alpha must be in [0, 1]");
  if (!(c.gcnii_alpha >= 0.0 && c.gcnii_alpha <= 1.0)) bad("gcnii_alpha must be in [0, 1]");
  if (!(c.gcnii_lambda >= 0.0 && std::isfinite(c.gcnii_lambda))) bad("gcnii_lambda must be non-negative");
  if (c.norm == NormKind::kLayer && c.hidden < 2) bad("layer norm needs hidden >= 2");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"backbone", to_string(c.backbone)},
       {"depth", c.depth},
       {"hidden", c.hidden},
       {"dropout", c.dropout},
       {"norm", to_string(c.norm)},
       {"residual", c.residual},
       {"ssg_alpha", c.ssg_alpha},
       {"gcnii_alpha", c.gcnii_alpha},
       {"gcnii_lambda", c.gcnii_lambda},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.backbone = parse_backbone(j.value("backbone", std::string(to_string(d.backbone))));
  c.depth = j.value("depth", d.depth);
  c.hidden = j.value("hidden", d.hidden);
  c.dropout = j.value("dropout", d.dropout);
  c.norm = parse_norm(j.value("norm", std::string(to_string(d.norm))));
  c.residual = j.value("residual", d.residual);
  c.ssg_alpha = j.value("ssg_alpha", d.ssg_alpha);
  c.gcnii_alpha = j.value("gcnii_alpha", d.gcnii_alpha);
  c.gcnii_lambda = j.value("gcnii_lambda", d.gcnii_lambda);
  c.seed = j.value("seed", d.seed);
}

double gcnii_beta(double lambda, int layer) {
  if (layer < 1) throw std::invalid_argument("gcnii layer index is 1-based");
  return std::log(lambda / static_cast<double>(layer) + 1.0);
}

// --- Model -----------------------------------------------------------------

std::size_t Model::add_param(std::string id, Tensor2 value) {
  params_.emplace_back(std::move(id), std::move(value));
  return params_.size() - 1;
}

Param& Model::param(std::string_view id) {
  auto it = std::find_if(params_.begin(), params_.end(), [&](const Param& p) { return p.id == id; });
  if (it == params_.end()) throw std::out_of_range("no parameter '" + std::string(id) + "'");
  return *it;
}

const Param& Model::param(std::string_view id) const {
  return const_cast<Model*>(this)->param(id);
}

bool Model::has_param(std::string_view id) const {
  return std::any_of(params_.begin(), params_.end(), [&](const Param& p) { return p.id == id; });
}

namespace {

std::string norm_prefix(const Param& scale) {
  const std::string suffix = ".scale";
  return scale.id.substr(0, scale.id.size() - suffix.size());
}

}  // namespace

std::vector<NamedTensor> Model::state() const {
  std::vector<NamedTensor> out;
  for (const Param& p : params_) out.push_back({p.id, p.value});
  for (const Block& b : blocks_) {
    if (!b.norm || config_.norm != NormKind::kBatch) continue;
    const std::string prefix = norm_prefix(params_[b.norm->scale]);
    out.push_back({prefix + ".running_mean", b.norm->stats.mean});
    out.push_back({prefix + ".running_var", b.norm->stats.var});
  }
  return out;
}

void Model::load_state(const std::vector<NamedTensor>& state) {
  std::map<std::string, const Tensor2*> by_id;
  for (const auto& t : state) {
    if (!by_id.emplace(t.id, &t.value).second) throw CheckpointError("duplicate tensor '" + t.id + "'");
  }
  std::size_t used = 0;
  auto take = [&](const std::string& id, Tensor2& dst) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw CheckpointError("checkpoint lacks tensor '" + id + "'");
    if (!it->second->same_shape(dst)) {
      throw CheckpointError("tensor '" + id + "' has shape " + it->second->shape_string() +
                            ", model expects " + dst.shape_string());
    }
    dst = *it->second;
    ++used;
  };
  for (Param& p : params_) take(p.id, p.value);
  for (Block& b : blocks_) {
    if (!b.norm || config_.norm != NormKind::kBatch) continue;
    const std::string prefix = norm_prefix(params_[b.norm->scale]);
    take(prefix + ".running_mean", b.norm->stats.mean);
    take(prefix + ".running_var", b.norm->stats.var);
  }
  if (used != state.size()) throw CheckpointError("checkpoint has tensors the model does not use");
}

Model build_model(const ModelConfig& config, std::size_t num_features, std::size_t num_labels) {
  validate(config);
  if (num_features < 1 || num_labels < 1) {
    throw std::invalid_argument("build_model: feature and label counts must be positive");
  }
  Model m;
  m.config_ = config;
  m.num_features_ = num_features;
  m.num_labels_ = num_labels;
  Rng rng = make_rng(config.seed, "init");

  auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor2 w(fan_in, fan_out);
    for (double& v : w.data()) v = u(rng);
    return w;
  };
  auto add_norm = [&](Model::Block& block, const std::string& prefix, std::size_t width) {
    if (config.norm == NormKind::kNone) return;
    Model::NormSlot slot;
    slot.scale = m.add_param(prefix + ".norm.scale", Tensor2(1, width, 1.0));
    slot.shift = m.add_param(prefix + ".norm.shift", Tensor2(1, width, 0.0));
    slot.stats = RunningStats(width);
    block.norm = std::move(slot);
  };

  const std::size_t h = config.hidden;
  const auto depth = static_cast<std::size_t>(config.depth);
  m.input_proj_ = m.add_param("input_proj.weight", glorot(num_features, h));

  switch (config.backbone) {
    case Backbone::kGcn:
      for (std::size_t l = 0; l < depth; ++l) {
        const bool output = l + 1 == depth;
        const std::size_t out = output ? num_labels : h;
        const std::string prefix = "layer" + std::to_string(l);
        Model::Block b;
        b.weight = m.add_param(prefix + ".weight", glorot(h, out));
        b.bias = m.add_param(prefix + ".bias", Tensor2(1, out));
        if (config.residual && out != h) b.res_proj = m.add_param(prefix + ".res_proj", glorot(h, out));
        if (!output) add_norm(b, prefix, out);
        m.blocks_.push_back(std::move(b));
      }
      break;
    case Backbone::kGcnii:
      for (std::size_t l = 0; l < depth; ++l) {
        const std::string prefix = "layer" + std::to_string(l);
        Model::Block b;
        b.weight = m.add_param(prefix + ".weight", glorot(h, h));
        add_norm(b, prefix, h);
        m.blocks_.push_back(std::move(b));
      }
      break;
    case Backbone::kSsgConv:
      for (std::size_t k = 0; k < depth; ++k) {
        Model::Block b;
        add_norm(b, "hop" + std::to_string(k), h);
        m.blocks_.push_back(std::move(b));
      }
      break;
  }
  if (config.backbone != Backbone::kGcn) {
    m.head_weight_ = m.add_param("head.weight", glorot(h, num_labels));
    m.head_bias_ = m.add_param("head.bias", Tensor2(1, num_labels));
  }
  return m;
}

// --- Layers ------------------------------------------------------------------

Var apply_norm(Tape& tape, Var x, const LayerParams& p, const ModelConfig& config, Mode mode) {
  switch (config.norm) {
    case NormKind::kNone:
      return x;
    case NormKind::kBatch:
      if (!p.norm_scale || !p.norm_shift || p.stats == nullptr) {
        throw std::invalid_argument("batch norm requested without its parameters");
      }
      return nn::batch_norm(tape, x, *p.norm_scale, *p.norm_shift, *p.stats, mode);
    case NormKind::kLayer:
      if (!p.norm_scale || !p.norm_shift) {
        throw std::invalid_argument("layer norm requested without its parameters");
      }
      return nn::layer_norm(tape, x, *p.norm_scale, *p.norm_shift);
  }
  return x;
}

namespace {

Var activate(Tape& tape, Var u, const LayerParams& p, const ModelConfig& config, Mode mode,
             Rng& rng) {
  Var x = apply_norm(tape, u, p, config, mode);
  x = nn::relu(tape, x);
  return nn::dropout(tape, x, config.dropout, mode, rng);
}

}  // namespace

Var gcn_layer(Tape& tape, const NormalizedAdjacency& adj, Var h, const LayerParams& p,
              const ModelConfig& config, bool output_layer, Mode mode, Rng& rng) {
  Var t = nn::linear(tape, nn::propagate(tape, adj, h), p.weight, p.bias);
  if (config.residual) {
    const std::size_t in = tape.value(h).cols();
    const std::size_t out = tape.value(t).cols();
    Var r = h;
    if (in != out) {
      if (!p.res_proj) throw ShapeError("gcn_layer: residual across widths needs a projection");
      r = nn::matmul(tape, h, *p.res_proj);
    }
    t = nn::add(tape, t, r);
  }
  if (output_layer) return t;
  return activate(tape, t, p, config, mode, rng);
}

Var gcnii_layer(Tape& tape, const NormalizedAdjacency& adj, Var h, Var h0, int layer,
                const LayerParams& p, const ModelConfig& config, Mode mode, Rng& rng) {
  require_same_shape(tape.value(h), tape.value(h0), "gcnii_layer");
  const double alpha = config.gcnii_alpha;
  const double beta = gcnii_beta(config.gcnii_lambda, layer);
  Var z = nn::axpby(tape, 1.0 - alpha, nn::propagate(tape, adj, h), alpha, h0);
  Var u = nn::axpby(tape, 1.0 - beta, z, beta, nn::matmul(tape, z, p.weight));
  if (config.residual) u = nn::add(tape, u, h);
  return activate(tape, u, p, config, mode, rng);
}

Var ssg_propagate(Tape& tape, const NormalizedAdjacency& adj, Var h0,
                  std::span<const LayerParams> hops, const ModelConfig& config, Mode mode,
                  Rng& rng) {
  if (hops.empty()) throw std::invalid_argument("ssg_propagate needs at least one hop");
  const double alpha = config.ssg_alpha;
  std::vector<Var> terms;
  terms.reserve(hops.size());
  Var prev = h0;
  for (const LayerParams& hop : hops) {
    Var cur = nn::propagate(tape, adj, prev);
    Var term = nn::axpby(tape, 1.0 - alpha, cur, alpha, h0);
    if (config.residual) term = nn::add(tape, term, prev);
    term = apply_norm(tape, term, hop, config, mode);
    term = nn::dropout(tape, term, config.dropout, mode, rng);
    terms.push_back(term);
    prev = cur;
  }
  return nn::mean(tape, terms);
}

// --- Forward -----------------------------------------------------------------

Var forward(Tape& tape, Model& model, const Graph& graph, const NormalizedAdjacency& adj,
            Mode mode, Rng& rng) {
  if (graph.num_features() != model.num_features_) {
    throw ShapeError("forward: graph has " + std::to_string(graph.num_features()) +
                     " features, model expects " + std::to_string(model.num_features_));
  }
  if (adj.num_nodes() != graph.num_nodes()) {
    throw ShapeError("forward: adjacency does not match the graph");
  }
  const ModelConfig& cfg = model.config_;
  auto& params = model.params_;

  auto layer_params = [&](Model::Block& b) {
    LayerParams p;
    if (b.weight) p.weight = tape.param(params[*b.weight]);
    if (b.bias) p.bias = tape.param(params[*b.bias]);
    if (b.res_proj) p.res_proj = tape.param(params[*b.res_proj]);
    if (b.norm) {
      p.norm_scale = tape.param(params[b.norm->scale]);
      p.norm_shift = tape.param(params[b.norm->shift]);
      p.stats = &b.norm->stats;
    }
    return p;
  };

  Var x = tape.constant(graph.features());
  Var h0 = nn::linear(tape, x, tape.param(params[model.input_proj_]));

  Var h = h0;
  const std::size_t depth = model.blocks_.size();
  switch (cfg.backbone) {
    case Backbone::kGcn:
      for (std::size_t l = 0; l < depth; ++l) {
        h = gcn_layer(tape, adj, h, layer_params(model.blocks_[l]), cfg, l + 1 == depth, mode, rng);
      }
      return h;
    case Backbone::kGcnii:
      for (std::size_t l = 0; l < depth; ++l) {
        h = gcnii_layer(tape, adj, h, h0, static_cast<int>(l) + 1, layer_params(model.blocks_[l]),
                        cfg, mode, rng);
      }
      break;
    case Backbone::kSsgConv: {
      std::vector<LayerParams> hops;
      for (auto& b : model.blocks_) hops.push_back(layer_params(b));
      h = ssg_propagate(tape, adj, h0, hops, cfg, mode, rng);
      break;
    }
  }
  return nn::linear(tape, h, tape.param(params[*model.head_weight_]),
                    tape.param(params[*model.head_bias_]));
}

Tensor2 predict_logits(const Model& model, const Graph& graph, const NormalizedAdjacency& adj) {
  // Eval mode on a non-recording tape reads parameters and running stats only.
  Tape tape(false);
  Rng unused(0);
  Var out = forward(tape, const_cast<Model&>(model), graph, adj, Mode::kEval, unused);
  return tape.value(out);
}

}  // namespace mlnc
