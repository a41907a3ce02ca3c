#include "vectorpose/pretrain.hpp"

#include <cmath>
#include <numbers>

namespace vectorpose {

void configure_determinism(bool deterministic) {
  if (!deterministic) return;
  at::set_num_threads(1);
  at::globalContext().setDeterministicAlgorithms(true, false);
}

torch::Tensor stack_grids(const std::vector<const Grid3f*>& grids) {
  if (grids.empty()) throw InvalidArgument("stack_grids: empty batch");
  const Extents3 e = grids.front()->extents();
  torch::Tensor out = torch::empty({std::int64_t(grids.size()), 1, e.z, e.y, e.x}, torch::kFloat32);
  float* dst = out.data_ptr<float>();
  for (const Grid3f* g : grids) {
    if (g->extents() != e) throw InvalidArgument("stack_grids: crops of different extents in one batch");
    std::copy(g->data(), g->data() + g->size(), dst);
    dst += g->size();
  }
  return out;
}

PretextTargets stack_targets(const std::vector<PretrainSample>& batch, int n_vectors) {
  const auto B = std::int64_t(batch.size());
  const Extents3 e = batch.front().voxel_target.extents();
  PretextTargets t;
  t.vp = torch::empty({B, n_vectors, 3}, torch::kFloat64);
  t.voxel = torch::empty({B, e.z, e.y, e.x}, torch::kFloat32);
  t.boundary = torch::empty({B, e.z, e.y, e.x}, torch::kFloat32);
  double* vp = t.vp.data_ptr<double>();
  float* vox = t.voxel.data_ptr<float>();
  float* bnd = t.boundary.data_ptr<float>();
  for (const PretrainSample& s : batch) {
    if (std::int64_t(s.vp.size()) != n_vectors) throw InvalidArgument("stack_targets: VP target count mismatch");
    for (const VpTarget& v : s.vp.targets) {
      *vp++ = v.r_norm;
      *vp++ = v.theta_norm;
      *vp++ = v.phi_norm;
    }
    vox = std::copy(s.voxel_target.data(), s.voxel_target.data() + s.voxel_target.size(), vox);
    bnd = std::copy(s.boundary_target.data(), s.boundary_target.data() + s.boundary_target.size(), bnd);
  }
  return t;
}

namespace {

using torch::autograd::AutogradContext;
using torch::autograd::variable_list;

constexpr int kStatCount = 8;

class PretextLossFunction : public torch::autograd::Function<PretextLossFunction> {
 public:
  static variable_list forward(AutogradContext* ctx, const torch::Tensor& vp_logits_in, const torch::Tensor& bfr_in,
                               const torch::Tensor& vp_targets_in, const torch::Tensor& voxel_in,
                               const torch::Tensor& boundary_in, double alpha, double lambda, std::int64_t norm) {
    const torch::Tensor vp_logits = vp_logits_in.to(torch::kFloat32).contiguous();
    const torch::Tensor bfr = bfr_in.to(torch::kFloat32).contiguous();
    const torch::Tensor vp_targets = vp_targets_in.to(torch::kFloat64).contiguous();
    const torch::Tensor voxel = voxel_in.contiguous();
    const torch::Tensor boundary = boundary_in.contiguous();

    const std::int64_t B = bfr.size(0);
    const std::int64_t n = vp_logits.size(1);
    const std::int64_t V = bfr.size(2) * bfr.size(3) * bfr.size(4);
    if (voxel.numel() != B * V || boundary.numel() != B * V || vp_targets.numel() != B * n * 3) {
      throw InvalidArgument("pretext_loss: targets do not match the network outputs");
    }

    torch::Tensor grad_vp = torch::zeros_like(vp_logits);
    torch::Tensor grad_bfr = torch::zeros_like(bfr);
    const float* vpl = vp_logits.data_ptr<float>();
    const double* vpt = vp_targets.data_ptr<double>();
    const float* out = bfr.data_ptr<float>();
    const float* yv = voxel.data_ptr<float>();
    const float* yb = boundary.data_ptr<float>();
    float* gvp = grad_vp.data_ptr<float>();
    float* gbfr = grad_bfr.data_ptr<float>();

    double sum_vp = 0, sum_bfr = 0, sum_r = 0, sum_t = 0, sum_p = 0, sum_vox = 0, sum_bnd = 0;
    std::vector<VpLogit> logits(n), grads(n);
    VpTargetSet targets;
    targets.targets.resize(n);
    const double vp_scale = (1.0 - lambda) / double(B);
    const double bfr_scale = lambda / double(B);
    for (std::int64_t b = 0; b < B; ++b) {
      if (n > 0) {
        for (std::int64_t m = 0; m < n; ++m) {
          const std::int64_t k = (b * n + m) * 3;
          logits[m] = {vpl[k], vpl[k + 1], vpl[k + 2]};
          targets.targets[m] = {vpt[k], vpt[k + 1], vpt[k + 2]};
        }
        const VpLossTerms vt = vp_loss_terms(logits, targets, grads);
        sum_vp += vt.loss;
        sum_r += vt.r;
        sum_t += vt.theta;
        sum_p += vt.phi;
        for (std::int64_t m = 0; m < n; ++m) {
          const std::int64_t k = (b * n + m) * 3;
          gvp[k] = float(vp_scale * grads[m].r);
          gvp[k + 1] = float(vp_scale * grads[m].theta);
          gvp[k + 2] = float(vp_scale * grads[m].phi);
        }
      }
      const float* vox_logits = out + b * 2 * V;
      float* gv = gbfr + b * 2 * V;
      const BfrLossTerms bt = bfr_loss_terms<float>(
          {vox_logits, std::size_t(V)}, {vox_logits + V, std::size_t(V)}, {yv + b * V, std::size_t(V)},
          {yb + b * V, std::size_t(V)}, alpha, static_cast<ReconNorm>(norm), {gv, std::size_t(V)},
          {gv + V, std::size_t(V)});
      for (std::int64_t i = 0; i < 2 * V; ++i) gv[i] = float(bfr_scale * gv[i]);
      sum_bfr += bt.loss;
      sum_vox += bt.voxel;
      sum_bnd += bt.boundary;
    }

    const double l_vp = sum_vp / double(B);
    const double l_bfr = sum_bfr / double(B);
    const double l_total = total_loss(l_vp, l_bfr, lambda);
    torch::Tensor stats = torch::tensor(
        std::vector<double>{l_total, l_vp, l_bfr, sum_r / double(B), sum_t / double(B), sum_p / double(B),
                            sum_vox / double(B), sum_bnd / double(B)},
        torch::kFloat64);
    ctx->save_for_backward({grad_vp, grad_bfr});
    ctx->mark_non_differentiable({stats});
    return {torch::tensor(l_total, torch::kFloat64), stats};
  }

  static variable_list backward(AutogradContext* ctx, variable_list grad_outputs) {
    const auto saved = ctx->get_saved_variables();
    const torch::Tensor g = grad_outputs[0].to(torch::kFloat32);
    return {saved[0] * g, saved[1] * g, {}, {}, {}, {}, {}, {}};
  }
};

}  // namespace

torch::Tensor pretext_loss(const PretextOutput& out, const PretextTargets& targets, double alpha, double lambda,
                           ReconNorm norm, LossBreakdown* breakdown) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("pretext_loss: lambda must lie in [0, 1]");
  auto result = PretextLossFunction::apply(out.vp, out.bfr, targets.vp, targets.voxel, targets.boundary, alpha, lambda,
                                           static_cast<std::int64_t>(norm));
  if (breakdown) {
    const auto s = result[1].accessor<double, 1>();
    static_assert(kStatCount == 8);
    *breakdown = {s[1], s[2], s[0], s[3], s[4], s[5], s[6], s[7]};
  }
  return result[0];
}

PretrainState init_pretrain_state(const RunConfig& cfg) {
  PretrainState state;
  state.cfg = cfg;
  state.net = make_network(cfg.pretrain_network(), NetworkMode::kPretrain, cfg.pretrain.seed);
  state.optimizer = std::make_unique<torch::optim::AdamW>(
      state.net->parameters(),
      torch::optim::AdamWOptions(cfg.pretrain.learning_rate).weight_decay(cfg.pretrain.weight_decay));
  return state;
}

LossBreakdown pretrain_step(PretrainState& state, const std::vector<PretrainSample>& batch) {
  if (batch.empty()) throw InvalidArgument("pretrain_step: empty batch");
  const PretrainConfig& p = state.cfg.pretrain;
  std::vector<const Grid3f*> inputs;
  for (const PretrainSample& s : batch) inputs.push_back(&s.input);
  const torch::Tensor x = stack_grids(inputs);
  const PretextTargets targets = stack_targets(batch, p.n_vectors);

  state.net->train();
  const PretextOutput out = state.net->forward_pretrain(x);
  LossBreakdown breakdown;
  const torch::Tensor loss = pretext_loss(out, targets, p.alpha, p.lambda, p.recon_norm, &breakdown);
  if (!std::isfinite(breakdown.l_total)) {
    std::vector<std::uint64_t> ids;
    for (const PretrainSample& s : batch) ids.push_back(s.index);
    throw DivergedTraining("non-finite pretraining loss at step " + std::to_string(state.step), ids);
  }
  state.optimizer->zero_grad();
  loss.backward();
  state.optimizer->step();
  ++state.step;
  state.samples_consumed += batch.size();
  return breakdown;
}

void save_pretrain_state(const std::filesystem::path& path, PretrainState& state) {
  CheckpointMeta meta;
  meta.kind = "pretrain";
  meta.run_config = to_json(state.cfg);
  meta.network = state.net->config();
  meta.mode = NetworkMode::kPretrain;
  meta.step = state.step;
  meta.epoch = state.epoch;
  meta.samples_consumed = state.samples_consumed;
  save_checkpoint(path, state.net, state.optimizer.get(), meta);
}

PretrainState load_pretrain_state(const std::filesystem::path& path) {
  CheckpointMeta meta;
  VectorPoseNet net = load_network(path, &meta);
  if (meta.kind != "pretrain") throw IncompatibleCheckpoint(path.string() + " is a " + meta.kind + " checkpoint");
  PretrainState state;
  state.cfg = run_config_from_json(meta.run_config);
  state.net = net;
  state.optimizer = std::make_unique<torch::optim::AdamW>(
      state.net->parameters(),
      torch::optim::AdamWOptions(state.cfg.pretrain.learning_rate).weight_decay(state.cfg.pretrain.weight_decay));
  load_optimizer_state(path, *state.optimizer);
  state.step = meta.step;
  state.epoch = meta.epoch;
  state.samples_consumed = meta.samples_consumed;
  return state;
}

Pretrainer::Pretrainer(PretrainState& state, const std::vector<Volume>& volumes)
    : state_(state), volumes_(volumes), settings_(sample_settings(state.cfg)) {
  if (volumes_.empty()) throw InvalidArgument("pretraining needs at least one volume");
  for (const Volume& v : volumes_) {
    for (int a = 0; a < 3; ++a) {
      if (v.shape()[a] < settings_.crop_extents[a]) {
        throw InvalidArgument("volume " + v.id + " of shape " + to_string(v.shape()) + " is smaller than the crop " +
                              to_string(settings_.crop_extents));
      }
    }
  }
}

std::uint64_t Pretrainer::samples_per_epoch() const {
  return std::uint64_t(volumes_.size()) * std::uint64_t(state_.cfg.pretrain.crops_per_volume);
}

std::int64_t Pretrainer::steps_per_epoch() const {
  const auto B = std::uint64_t(state_.cfg.pretrain.batch_size);
  return std::int64_t((samples_per_epoch() + B - 1) / B);
}

double Pretrainer::learning_rate() const {
  const PretrainConfig& p = state_.cfg.pretrain;
  if (p.schedule != "cosine") return p.learning_rate;
  const double total = double(p.epochs) * double(steps_per_epoch());
  const double t = std::min(1.0, double(state_.step) / total);
  return 0.5 * p.learning_rate * (1.0 + std::cos(std::numbers::pi * t));
}

void Pretrainer::reset_loader() {
  loader_.reset();
  const std::size_t volumes = volumes_.size();
  loader_ = std::make_unique<OrderedPrefetcher<PretrainSample>>(
      [this, volumes](std::uint64_t index) {
        const std::size_t v = volume_for_sample(index, volumes);
        return build_pretrain_sample(volumes_[v], v, settings_, index);
      },
      state_.samples_consumed, effective_workers(state_.cfg.output),
      std::size_t(state_.cfg.output.prefetch) * std::size_t(state_.cfg.pretrain.batch_size));
  loader_next_ = state_.samples_consumed;
}

LossBreakdown Pretrainer::step() {
  if (!loader_ || loader_next_ != state_.samples_consumed) reset_loader();
  const std::uint64_t per_epoch = samples_per_epoch();
  const std::uint64_t left_in_epoch = per_epoch - state_.samples_consumed % per_epoch;
  const std::uint64_t count = std::min<std::uint64_t>(left_in_epoch, std::uint64_t(state_.cfg.pretrain.batch_size));
  std::vector<PretrainSample> batch;
  batch.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) batch.push_back(loader_->next());
  loader_next_ += count;

  const double lr = learning_rate();
  for (auto& group : state_.optimizer->param_groups()) group.options().set_lr(lr);
  const LossBreakdown b = pretrain_step(state_, batch);
  state_.epoch = std::int64_t(state_.samples_consumed / per_epoch);
  return b;
}

void Pretrainer::run(int epochs, MetricsWriter* metrics, const std::function<void(PretrainState&)>& on_epoch) {
  while (state_.epoch < epochs) {
    const std::int64_t epoch_before = state_.epoch;
    const LossBreakdown b = step();
    if (metrics) {
      MetricRecord r;
      r.kind = "pretrain";
      r.step = state_.step;
      r.epoch = state_.epoch;
      r.losses = b;
      metrics->write(std::move(r));
    }
    if (state_.epoch != epoch_before && on_epoch) on_epoch(state_);
  }
}

}  // namespace vectorpose
