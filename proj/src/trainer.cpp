#include "lemda/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace lemda {

void LossWeights::validate() const {
  if (w1 < 0.0 || w2 < 0.0 || w3 < 0.0) throw ConfigError("loss weights must be >= 0");
  if (alpha_conf < 0.0 || alpha_conf > 1.0) throw ConfigError("alpha_conf must lie in [0,1]");
}

RegularizerKind regularizer_from_string(const std::string& s) {
  if (s == "none") return RegularizerKind::none;
  if (s == "consistency") return RegularizerKind::consistency;
  if (s == "l2") return RegularizerKind::l2;
  if (s == "consistency_l2") return RegularizerKind::consistency_plus_l2;
  throw ConfigError("unknown regularizer kind: " + s);
}

std::string to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::none: return "none";
    case RegularizerKind::consistency: return "consistency";
    case RegularizerKind::l2: return "l2";
    case RegularizerKind::consistency_plus_l2: return "consistency_l2";
  }
  return "?";
}

std::vector<bool> consistency_mask(const Tensor& probs, double alpha) {
  if (probs.rank() != 2) throw std::invalid_argument("consistency_mask: probs must be rank 2");
  const int b = probs.dim(0), c = probs.dim(1);
  std::vector<bool> mask(static_cast<std::size_t>(b));
  for (int r = 0; r < b; ++r) {
    double best = probs.data()[static_cast<std::size_t>(r) * c];
    for (int j = 1; j < c; ++j) best = std::max(best, probs.data()[static_cast<std::size_t>(r) * c + j]);
    mask[static_cast<std::size_t>(r)] = best > alpha;
  }
  return mask;
}

Tensor l2_regularizer_variant(const std::vector<Tensor>& z, const std::vector<Tensor>& augmented) {
  if (z.size() != augmented.size() || z.empty()) {
    throw std::invalid_argument("l2_regularizer_variant: feature list sizes differ");
  }
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i].shape() != augmented[i].shape()) {
      throw std::invalid_argument("l2_regularizer_variant: feature " + std::to_string(i) +
                                  " shapes differ: " + shape_str(z[i].shape()) + " vs " +
                                  shape_str(augmented[i].shape()));
    }
  }
  Tensor za = (z.size() == 1 ? z[0] : concat_cols(z)).detach();
  Tensor aa = augmented.size() == 1 ? augmented[0] : concat_cols(augmented);
  Tensor d = sub(aa, za);
  const int b = za.dim(0);
  return mul_scalar(sum(mul(d, d)), 1.0 / static_cast<double>(b));
}

namespace {

double checked(const Tensor& t, const char* what, std::int64_t step) {
  const double v = t.value();
  if (!std::isfinite(v)) {
    throw DivergenceError("non-finite " + std::string(what) + " (" + std::to_string(v) + ") at step " +
                          std::to_string(step));
  }
  return v;
}

struct GPhaseOutcome {
  double consistency = 0.0;
  double vae_kl = 0.0;
  double mask_fraction = 0.0;
};

Tensor consistency_term(RegularizerKind reg, const Tensor& y_hat, const Tensor& y_g,
                        const std::vector<bool>& mask, const std::vector<Tensor>& z,
                        const std::vector<Tensor>& augmented) {
  switch (reg) {
    case RegularizerKind::none:
      return Tensor::scalar(0.0);
    case RegularizerKind::consistency:
      return kl_divergence(y_hat, y_g, mask);
    case RegularizerKind::l2:
      return l2_regularizer_variant(z, augmented);
    case RegularizerKind::consistency_plus_l2:
      return add(kl_divergence(y_hat, y_g, mask), l2_regularizer_variant(z, augmented));
  }
  return Tensor::scalar(0.0);
}

GPhaseOutcome g_phase(TaskNetwork& f, const AugmentationNetwork& g, const MultimodalBatch& batch,
                      const LossWeights& weights, Optimizer& opt_g, Rng& rng, RegularizerKind reg,
                      std::int64_t step_index, bool apply_update) {
  GPhaseOutcome out;
  std::vector<Tensor> z = f.forward_before(batch);
  Tensor y_hat = f.forward_after(z);
  AugmentResult aug = g.augment(z, rng, true);
  Tensor y_g = f.forward_after(aug.features);

  std::vector<bool> mask;
  {
    NoGradGuard ng;
    mask = consistency_mask(softmax(y_hat.detach()), weights.alpha_conf);
  }
  int masked = 0;
  for (bool v : mask) masked += v ? 1 : 0;
  out.mask_fraction = static_cast<double>(masked) / static_cast<double>(batch.size());

  Tensor ce_aug = cross_entropy(y_g, batch.labels);
  Tensor consist = consistency_term(reg, y_hat, y_g, mask, z, aug.features);
  out.consistency = checked(consist, "consistency loss", step_index);
  out.vae_kl = checked(aug.kl, "vae kl", step_index);
  checked(ce_aug, "augmented task loss", step_index);

  if (apply_update) {
    Tensor loss_g = add(add(mul_scalar(ce_aug, -weights.w1), mul_scalar(consist, weights.w2)),
                        mul_scalar(aug.kl, weights.w3));
    backward(loss_g);
    opt_g.step();
  } else {
    Tape::active().clear();
  }
  return out;
}

}  // namespace

StepReport lemda_step(TaskNetwork& f, const AugmentationNetwork& g, const MultimodalBatch& batch,
                      const LossWeights& weights, Optimizer& opt_f, Optimizer& opt_g, Rng& rng,
                      RegularizerKind regularizer, std::int64_t step_index, bool update_g) {
  if (batch.size() == 0) throw std::invalid_argument("lemda_step: empty batch");
  weights.validate();
  StepReport report;
  report.step_index = step_index;

  // Augmentation-network update first; gradients confined to G's parameters.
  opt_g.zero_grad();
  GPhaseOutcome gout =
      g_phase(f, g, batch, weights, opt_g, rng, regularizer, step_index, update_g);
  report.consistency_loss = gout.consistency;
  report.vae_kl = gout.vae_kl;
  report.mask_fraction = gout.mask_fraction;

  // Task-network update on a fresh forward pass, G held constant.
  opt_f.zero_grad();
  std::vector<Tensor> z = f.forward_before(batch);
  Tensor y_hat = f.forward_after(z);
  AugmentResult aug = g.augment(z, rng, true);
  Tensor y_g = f.forward_after(aug.features);
  Tensor ce_orig = cross_entropy(y_hat, batch.labels);
  Tensor ce_aug = cross_entropy(y_g, batch.labels);
  report.task_loss_orig = checked(ce_orig, "task loss", step_index);
  report.task_loss_aug = checked(ce_aug, "augmented task loss", step_index);
  backward(add(ce_orig, ce_aug));
  opt_f.step();
  return report;
}

// ---------------------------------------------------------------------------
// Training loop.

namespace {

// One plain supervised step on a (possibly transformed) batch.
double supervised_step(TaskNetwork& f, const MultimodalBatch& batch, Optimizer& opt_f,
                       std::int64_t step_index) {
  opt_f.zero_grad();
  Tensor logits = f.forward(batch);
  Tensor loss = batch.soft_labels.defined() ? cross_entropy_soft(logits, batch.soft_labels)
                                            : cross_entropy(logits, batch.labels);
  const double v = checked(loss, "task loss", step_index);
  backward(loss);
  opt_f.step();
  return v;
}

double manifold_mixup_step(TaskNetwork& f, const MultimodalBatch& batch, const BaselineSpec& spec,
                           Optimizer& opt_f, Rng& rng, std::int64_t step_index) {
  const int b = batch.size();
  std::vector<int> perm(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) perm[static_cast<std::size_t>(i)] = i;
  rng.shuffle(perm);
  opt_f.zero_grad();
  std::vector<Tensor> z = f.forward_before(batch);
  std::vector<Tensor> zb;
  zb.reserve(z.size());
  for (const auto& t : z) zb.push_back(permute_rows(t, perm));
  std::vector<int> labels_b(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) labels_b[static_cast<std::size_t>(i)] = batch.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  auto [mixed, soft] = manifold_mixup(z, zb, batch.labels, labels_b, spec.alpha, rng,
                                      f.num_classes(), std::nullopt, &batch.specs, &spec.toggles);
  Tensor loss = cross_entropy_soft(f.forward_after(mixed), soft);
  const double v = checked(loss, "task loss", step_index);
  backward(loss);
  opt_f.step();
  return v;
}

std::vector<int> within_batch_permutation(int b, Rng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) perm[static_cast<std::size_t>(i)] = i;
  rng.shuffle(perm);
  return perm;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

StepReport training_step(TaskNetwork& f, const AugmentationNetwork* g, const MultimodalBatch& batch,
                         const TrainConfig& cfg, Optimizer& opt_f, Optimizer& opt_g, Rng& rng,
                         std::int64_t step_index) {
  StepReport report;
  report.step_index = step_index;
  const bool is_lemda =
      cfg.augment == AugmentChoice::lemda_mlp_vae || cfg.augment == AugmentChoice::lemda_attention_vae;
  if (is_lemda) {
    if (g == nullptr) throw std::invalid_argument("training_step: LeMDA needs an augmentation network");
    const bool update_g = (step_index % cfg.g_update_every) == 0;
    return lemda_step(f, *g, batch, cfg.weights, opt_f, opt_g, rng, cfg.regularizer, step_index,
                      update_g);
  }
  if (cfg.augment == AugmentChoice::none || cfg.baseline.kind == BaselineKind::none) {
    report.task_loss_orig = supervised_step(f, batch, opt_f, step_index);
    return report;
  }
  switch (cfg.baseline.kind) {
    case BaselineKind::input_aug: {
      MultimodalBatch augmented = input_augment(batch, cfg.baseline.toggles, rng);
      report.task_loss_orig = supervised_step(f, augmented, opt_f, step_index);
      break;
    }
    case BaselineKind::mixup: {
      MultimodalBatch pair = gather_rows(batch, within_batch_permutation(batch.size(), rng));
      MultimodalBatch mixed = mixup_extended(batch, pair, cfg.baseline.alpha, rng, f.num_classes(),
                                             std::nullopt, &cfg.baseline.toggles);
      report.task_loss_orig = supervised_step(f, mixed, opt_f, step_index);
      break;
    }
    case BaselineKind::manifold_mixup:
      report.task_loss_orig = manifold_mixup_step(f, batch, cfg.baseline, opt_f, rng, step_index);
      break;
    case BaselineKind::mixgen: {
      MultimodalBatch pair = gather_rows(batch, within_batch_permutation(batch.size(), rng));
      MultimodalBatch generated = mixgen_style(batch, pair, cfg.baseline.lambda, &cfg.baseline.toggles);
      report.task_loss_orig = supervised_step(f, concat_batches(batch, generated), opt_f, step_index);
      break;
    }
    case BaselineKind::none:
      break;  // handled above
  }
  return report;
}

TrainingHistory train(TaskNetwork& f, const AugmentationNetwork* g, const Dataset& data,
                      const TrainConfig& cfg) {
  if (data.examples.empty() || data.train_idx.empty()) {
    throw std::invalid_argument("train: empty dataset");
  }
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.g_update_every < 1) throw ConfigError("g_update_every must be >= 1");
  const bool is_lemda =
      cfg.augment == AugmentChoice::lemda_mlp_vae || cfg.augment == AugmentChoice::lemda_attention_vae;
  if (is_lemda && g == nullptr) throw std::invalid_argument("train: LeMDA needs an augmentation network");
  cfg.weights.validate();
  if (cfg.augment == AugmentChoice::baseline) cfg.baseline.validate();

  Optimizer opt_f = Optimizer::make(cfg.optimizer, cfg.lr_f);
  opt_f.attach(f.params());
  Optimizer opt_g = Optimizer::make(cfg.optimizer, cfg.lr_g);
  if (is_lemda) opt_g.attach(g->params());

  Rng rng(seed_stream(cfg.seed, 0x7EA1ull));
  TrainingHistory history;
  double best_val = -1.0;
  int since_best = 0;
  std::int64_t step_index = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order = data.train_idx;
    rng.shuffle(order);

    double sum_task = 0.0, sum_consist = 0.0, sum_kl = 0.0, sum_mask = 0.0;
    int steps_in_epoch = 0;

    for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(cfg.batch_size));
      std::vector<int> idx(order.begin() + static_cast<long>(pos), order.begin() + static_cast<long>(end));
      MultimodalBatch batch = data.make_batch(idx);
      StepReport report = training_step(f, g, batch, cfg, opt_f, opt_g, rng, step_index);

      sum_task += report.task_loss_orig;
      sum_consist += report.consistency_loss;
      sum_kl += report.vae_kl;
      sum_mask += report.mask_fraction;
      ++steps_in_epoch;
      ++step_index;
      if (cfg.record_steps) history.steps.push_back(report);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_task_loss = sum_task / steps_in_epoch;
    rec.consistency = sum_consist / steps_in_epoch;
    rec.vae_kl = sum_kl / steps_in_epoch;
    rec.mask_fraction = sum_mask / steps_in_epoch;
    rec.val_accuracy = data.val_idx.empty() ? 0.0 : evaluate_accuracy(f, data, data.val_idx);
    history.epochs.push_back(rec);
    history.final_val_accuracy = rec.val_accuracy;

    if (cfg.early_stop_patience > 0 && !data.val_idx.empty()) {
      if (rec.val_accuracy > best_val) {
        best_val = rec.val_accuracy;
        since_best = 0;
      } else if (++since_best >= cfg.early_stop_patience) {
        break;
      }
    }
  }
  return history;
}

std::string history_epochs_csv(const TrainingHistory& h) {
  std::ostringstream os;
  os << "epoch,train_task_loss,consistency,vae_kl,mask_fraction,val_accuracy\n";
  for (const auto& e : h.epochs) {
    os << e.epoch << "," << fmt_g(e.train_task_loss) << "," << fmt_g(e.consistency) << ","
       << fmt_g(e.vae_kl) << "," << fmt_g(e.mask_fraction) << "," << fmt_g(e.val_accuracy) << "\n";
  }
  return os.str();
}

std::string history_steps_csv(const TrainingHistory& h) {
  std::ostringstream os;
  os << "step,task_loss_orig,task_loss_aug,consistency,vae_kl,mask_fraction\n";
  for (const auto& s : h.steps) {
    os << s.step_index << "," << fmt_g(s.task_loss_orig) << "," << fmt_g(s.task_loss_aug) << ","
       << fmt_g(s.consistency_loss) << "," << fmt_g(s.vae_kl) << "," << fmt_g(s.mask_fraction) << "\n";
  }
  return os.str();
}

double evaluate_accuracy(const TaskNetwork& f, const Dataset& data, const std::vector<int>& indices,
                         int batch_size) {
  if (indices.empty()) throw std::invalid_argument("evaluate_accuracy: no indices");
  int correct = 0;
  for (std::size_t pos = 0; pos < indices.size(); pos += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(indices.size(), pos + static_cast<std::size_t>(batch_size));
    std::vector<int> idx(indices.begin() + static_cast<long>(pos), indices.begin() + static_cast<long>(end));
    MultimodalBatch batch = data.make_batch(idx);
    Prediction pred = f.predict(batch);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (pred.labels[i] == batch.labels[i]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

}  // namespace lemda
