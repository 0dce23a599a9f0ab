#include "lemda/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lemda {

BaselineKind baseline_kind_from_string(const std::string& s) {
  if (s == "none") return BaselineKind::none;
  if (s == "input_aug") return BaselineKind::input_aug;
  if (s == "mixup") return BaselineKind::mixup;
  if (s == "manifold_mixup") return BaselineKind::manifold_mixup;
  if (s == "mixgen") return BaselineKind::mixgen;
  throw std::invalid_argument("unknown baseline kind: " + s);
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::none: return "none";
    case BaselineKind::input_aug: return "input_aug";
    case BaselineKind::mixup: return "mixup";
    case BaselineKind::manifold_mixup: return "manifold_mixup";
    case BaselineKind::mixgen: return "mixgen";
  }
  return "?";
}

void BaselineSpec::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("baseline alpha must lie in (0,1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("baseline lambda must lie in [0,1]");
}

bool toggled(const std::vector<std::string>& toggles, const std::string& name) {
  return std::find(toggles.begin(), toggles.end(), name) != toggles.end();
}

namespace {

void check_pairable(const MultimodalBatch& a, const MultimodalBatch& b, const char* op) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(op) + ": batch sizes differ (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
  if (a.specs.size() != b.specs.size()) {
    throw std::invalid_argument(std::string(op) + ": modality counts differ");
  }
}

}  // namespace

MultimodalBatch input_augment(const MultimodalBatch& batch, const std::vector<std::string>& toggles,
                              Rng& rng) {
  MultimodalBatch out = batch;
  const int b = batch.size();
  for (std::size_t m = 0; m < batch.specs.size(); ++m) {
    const auto& spec = batch.specs[m];
    if (!toggled(toggles, spec.name)) continue;
    auto& md = out.modalities[m];
    switch (spec.kind) {
      case ModalityKind::continuous_vector: {
        const int d = spec.dim;
        std::vector<double> data = md.continuous.data();
        // Per-feature std over the batch sets the noise scale.
        std::vector<double> feat_std(static_cast<std::size_t>(d), 0.0);
        for (int j = 0; j < d; ++j) {
          double s = 0.0, s2 = 0.0;
          for (int r = 0; r < b; ++r) {
            const double v = data[static_cast<std::size_t>(r) * d + j];
            s += v;
            s2 += v * v;
          }
          const double mean = s / b;
          feat_std[static_cast<std::size_t>(j)] = std::sqrt(std::max(0.0, s2 / b - mean * mean));
        }
        for (int r = 0; r < b; ++r) {
          double* row = data.data() + static_cast<std::size_t>(r) * d;
          switch (rng.uniform_int(3)) {
            case 0: {  // gaussian noise, sigma in [0, 0.1 * feature std]
              const double u = rng.uniform();
              for (int j = 0; j < d; ++j) row[j] += u * 0.1 * feat_std[static_cast<std::size_t>(j)] * rng.normal();
              break;
            }
            case 1: {  // random scaling
              const double s = rng.uniform(0.9, 1.1);
              for (int j = 0; j < d; ++j) row[j] *= s;
              break;
            }
            default: {  // feature dropout
              for (int j = 0; j < d; ++j) {
                if (rng.bernoulli(0.1)) row[j] = 0.0;
              }
              break;
            }
          }
        }
        md.continuous = Tensor(Shape{b, d}, std::move(data));
        break;
      }
      case ModalityKind::token_sequence: {
        for (auto& seq : md.tokens) {
          const int len = static_cast<int>(seq.size());
          switch (rng.uniform_int(3)) {
            case 0: {  // swap two positions
              if (len >= 2) {
                const int i = rng.uniform_int(len);
                const int j = rng.uniform_int(len);
                std::swap(seq[static_cast<std::size_t>(i)], seq[static_cast<std::size_t>(j)]);
              }
              break;
            }
            case 1: {  // delete one token; length-1 sequences stay unchanged
              if (len >= 2) seq.erase(seq.begin() + rng.uniform_int(len));
              break;
            }
            default: {  // duplicate one token in place
              const int i = rng.uniform_int(len);
              seq.insert(seq.begin() + i, seq[static_cast<std::size_t>(i)]);
              if (static_cast<int>(seq.size()) > spec.max_len) seq.resize(static_cast<std::size_t>(spec.max_len));
              break;
            }
          }
        }
        break;
      }
      case ModalityKind::categorical:
        break;  // no structure-preserving analogue; passes through
    }
  }
  return out;
}

MultimodalBatch mixup_extended(const MultimodalBatch& batch_a, const MultimodalBatch& batch_b,
                               double alpha, Rng& rng, int num_classes,
                               std::optional<double> lambda_override,
                               const std::vector<std::string>* toggles) {
  check_pairable(batch_a, batch_b, "mixup_extended");
  const int b = batch_a.size();
  auto active = [&](const std::string& name) { return toggles == nullptr || toggled(*toggles, name); };

  // Per-pair draws in a fixed order: lambda first, then one j per
  // non-numeric modality.
  std::vector<double> lambdas(static_cast<std::size_t>(b));
  std::vector<std::vector<bool>> take_first(static_cast<std::size_t>(b));
  for (int r = 0; r < b; ++r) {
    lambdas[static_cast<std::size_t>(r)] = lambda_override ? *lambda_override : rng.beta(alpha, alpha);
    for (const auto& spec : batch_a.specs) {
      if (spec.kind != ModalityKind::continuous_vector) {
        take_first[static_cast<std::size_t>(r)].push_back(rng.uniform() < alpha);
      }
    }
  }

  MultimodalBatch out = batch_a;
  for (std::size_t m = 0, nonnum = 0; m < batch_a.specs.size(); ++m) {
    const auto& spec = batch_a.specs[m];
    if (spec.kind == ModalityKind::continuous_vector) {
      if (!active(spec.name)) continue;
      const int d = spec.dim;
      std::vector<double> data(static_cast<std::size_t>(b) * d);
      const auto& da = batch_a.modalities[m].continuous.data();
      const auto& db = batch_b.modalities[m].continuous.data();
      for (int r = 0; r < b; ++r) {
        const double lam = lambdas[static_cast<std::size_t>(r)];
        for (int j = 0; j < d; ++j) {
          const std::size_t k = static_cast<std::size_t>(r) * d + j;
          data[k] = lam * da[k] + (1.0 - lam) * db[k];
        }
      }
      out.modalities[m].continuous = Tensor(Shape{b, d}, std::move(data));
    } else {
      const std::size_t sel = nonnum++;
      if (!active(spec.name)) continue;
      for (int r = 0; r < b; ++r) {
        if (!take_first[static_cast<std::size_t>(r)][sel]) {
          if (spec.kind == ModalityKind::token_sequence) {
            out.modalities[m].tokens[static_cast<std::size_t>(r)] =
                batch_b.modalities[m].tokens[static_cast<std::size_t>(r)];
          } else {
            out.modalities[m].categories[static_cast<std::size_t>(r)] =
                batch_b.modalities[m].categories[static_cast<std::size_t>(r)];
          }
        }
      }
    }
  }

  // Soft labels interpolate regardless of modality toggles.
  std::vector<double> soft(static_cast<std::size_t>(b) * num_classes, 0.0);
  for (int r = 0; r < b; ++r) {
    const double lam = lambdas[static_cast<std::size_t>(r)];
    soft[static_cast<std::size_t>(r) * num_classes + batch_a.labels[static_cast<std::size_t>(r)]] += lam;
    soft[static_cast<std::size_t>(r) * num_classes + batch_b.labels[static_cast<std::size_t>(r)]] += 1.0 - lam;
  }
  out.soft_labels = Tensor(Shape{b, num_classes}, std::move(soft));
  return out;
}

std::pair<std::vector<Tensor>, Tensor> manifold_mixup(
    const std::vector<Tensor>& features_a, const std::vector<Tensor>& features_b,
    const std::vector<int>& labels_a, const std::vector<int>& labels_b, double alpha, Rng& rng,
    int num_classes, std::optional<double> lambda_override,
    const std::vector<ModalitySpec>* specs, const std::vector<std::string>* toggles) {
  if (features_a.size() != features_b.size()) {
    throw std::invalid_argument("manifold_mixup: feature list sizes differ");
  }
  if (features_a.empty()) throw std::invalid_argument("manifold_mixup: no features");
  const int b = features_a[0].dim(0);
  if (static_cast<int>(labels_a.size()) != b || static_cast<int>(labels_b.size()) != b) {
    throw std::invalid_argument("manifold_mixup: label count does not match batch size");
  }
  std::vector<double> lambdas(static_cast<std::size_t>(b));
  for (int r = 0; r < b; ++r) {
    lambdas[static_cast<std::size_t>(r)] = lambda_override ? *lambda_override : rng.beta(alpha, alpha);
  }

  auto active = [&](std::size_t m) {
    if (toggles == nullptr || specs == nullptr) return true;
    return toggled(*toggles, (*specs)[m].name);
  };

  std::vector<Tensor> mixed;
  for (std::size_t m = 0; m < features_a.size(); ++m) {
    const auto& fa = features_a[m];
    const auto& fb = features_b[m];
    if (fa.shape() != fb.shape()) {
      throw std::invalid_argument("manifold_mixup: feature shapes differ: " + shape_str(fa.shape()) +
                                  " vs " + shape_str(fb.shape()));
    }
    if (!active(m)) {
      mixed.push_back(fa);
      continue;
    }
    const int d = fa.dim(1);
    std::vector<double> wa(static_cast<std::size_t>(b) * d), wb(static_cast<std::size_t>(b) * d);
    for (int r = 0; r < b; ++r) {
      const double lam = lambdas[static_cast<std::size_t>(r)];
      for (int j = 0; j < d; ++j) {
        wa[static_cast<std::size_t>(r) * d + j] = lam;
        wb[static_cast<std::size_t>(r) * d + j] = 1.0 - lam;
      }
    }
    mixed.push_back(add(mul(fa, Tensor(fa.shape(), std::move(wa))),
                        mul(fb, Tensor(fb.shape(), std::move(wb)))));
  }

  std::vector<double> soft(static_cast<std::size_t>(b) * num_classes, 0.0);
  for (int r = 0; r < b; ++r) {
    const double lam = lambdas[static_cast<std::size_t>(r)];
    soft[static_cast<std::size_t>(r) * num_classes + labels_a[static_cast<std::size_t>(r)]] += lam;
    soft[static_cast<std::size_t>(r) * num_classes + labels_b[static_cast<std::size_t>(r)]] += 1.0 - lam;
  }
  return {std::move(mixed), Tensor(Shape{b, num_classes}, std::move(soft))};
}

MultimodalBatch mixgen_style(const MultimodalBatch& batch_a, const MultimodalBatch& batch_b,
                             double lambda, const std::vector<std::string>* toggles) {
  check_pairable(batch_a, batch_b, "mixgen_style");
  bool has_cont = false, has_tok = false;
  for (const auto& spec : batch_a.specs) {
    has_cont = has_cont || spec.kind == ModalityKind::continuous_vector;
    has_tok = has_tok || spec.kind == ModalityKind::token_sequence;
  }
  if (!has_cont || !has_tok) {
    throw std::invalid_argument(
        "mixgen_style: requires at least one continuous and one token modality");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("mixgen_style: lambda must lie in [0,1]");
  auto active = [&](const std::string& name) { return toggles == nullptr || toggled(*toggles, name); };

  MultimodalBatch out = batch_a;  // labels come from batch_a
  const int b = batch_a.size();
  for (std::size_t m = 0; m < batch_a.specs.size(); ++m) {
    const auto& spec = batch_a.specs[m];
    if (!active(spec.name)) continue;
    switch (spec.kind) {
      case ModalityKind::continuous_vector: {
        const int d = spec.dim;
        std::vector<double> data(static_cast<std::size_t>(b) * d);
        const auto& da = batch_a.modalities[m].continuous.data();
        const auto& db = batch_b.modalities[m].continuous.data();
        for (std::size_t k = 0; k < data.size(); ++k) data[k] = lambda * da[k] + (1.0 - lambda) * db[k];
        out.modalities[m].continuous = Tensor(Shape{b, d}, std::move(data));
        break;
      }
      case ModalityKind::token_sequence: {
        for (int r = 0; r < b; ++r) {
          auto& seq = out.modalities[m].tokens[static_cast<std::size_t>(r)];
          const auto& other = batch_b.modalities[m].tokens[static_cast<std::size_t>(r)];
          seq.insert(seq.end(), other.begin(), other.end());
          if (static_cast<int>(seq.size()) > spec.max_len) seq.resize(static_cast<std::size_t>(spec.max_len));
        }
        break;
      }
      case ModalityKind::categorical:
        break;  // outside mixgen's image/text recipe; kept from batch_a
    }
  }
  return out;
}

}  // namespace lemda
