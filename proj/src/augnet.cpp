#include "lemda/augnet.hpp"

#include <numeric>
#include <stdexcept>

namespace lemda {

namespace {

void check_features(const std::vector<int>& dims, const std::vector<Tensor>& features) {
  if (features.size() != dims.size()) {
    throw std::invalid_argument("augment: got " + std::to_string(features.size()) +
                                " features, network was built for " + std::to_string(dims.size()));
  }
  const int b = features.empty() ? 0 : features[0].dim(0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].rank() != 2 || features[i].dim(0) != b ||
        features[i].dim(1) != dims[i]) {
      throw std::invalid_argument("augment: feature " + std::to_string(i) + " has shape " +
                                  shape_str(features[i].shape()) + ", expected [" + std::to_string(b) +
                                  "," + std::to_string(dims[i]) + "]");
    }
  }
}

}  // namespace

Tensor standard_normal_kl(const Tensor& mu, const Tensor& log_var) {
  if (mu.shape() != log_var.shape()) {
    throw std::invalid_argument("standard_normal_kl: shape mismatch " + shape_str(mu.shape()) +
                                " vs " + shape_str(log_var.shape()));
  }
  const int batch = mu.dim(0);
  // 0.5 * sum(exp(lv) + mu^2 - 1 - lv), averaged over the batch dim.
  Tensor lv = clamp(log_var, -30.0, 30.0);
  Tensor terms = sub(sub(add(exp(lv), mul(mu, mu)), Tensor::scalar(1.0)), lv);
  return mul_scalar(sum(terms), 0.5 / static_cast<double>(batch));
}

void init_log_var_head(Linear& head, int latent_dim, double bias) {
  const int out = head.weight.dim(1);
  if (out != 2 * latent_dim) {
    throw std::invalid_argument("init_log_var_head: head emits " + std::to_string(out) +
                                " values, expected " + std::to_string(2 * latent_dim));
  }
  const int in = head.weight.dim(0);
  auto& w = head.weight.data();
  for (int i = 0; i < in; ++i) {
    for (int j = latent_dim; j < out; ++j) {
      w[static_cast<std::size_t>(i) * out + j] *= 0.1;
    }
  }
  auto& b = head.bias.data();
  for (int j = latent_dim; j < out; ++j) b[static_cast<std::size_t>(j)] = bias;
}

// ---------------------------------------------------------------------------
// MlpVae

MlpVae::MlpVae(std::vector<int> feature_dims, int latent_dim, int hidden, double dropout_p, Rng& rng)
    : feature_dims_(std::move(feature_dims)),
      total_dim_(std::accumulate(feature_dims_.begin(), feature_dims_.end(), 0)),
      latent_dim_(latent_dim),
      dropout_p_(dropout_p),
      enc_hidden_(total_dim_, hidden, rng),
      enc_out_(hidden, 2 * latent_dim, rng),
      dec_hidden_(latent_dim, hidden, rng),
      dec_out_(hidden, total_dim_, rng) {
  if (feature_dims_.empty() || total_dim_ <= 0 || latent_dim_ <= 0) {
    throw std::invalid_argument("MlpVae: invalid feature dims or latent dim");
  }
  init_log_var_head(enc_out_, latent_dim_, -2.0);
}

AugmentResult MlpVae::augment(const std::vector<Tensor>& features, Rng& rng, bool train) const {
  check_features(feature_dims_, features);
  Tensor x = features.size() == 1 ? features[0] : concat_cols(features);
  Tensor h = dropout(relu(enc_hidden_.forward(x)), dropout_p_, rng, train);
  Tensor enc = enc_out_.forward(h);
  Tensor mu = slice_cols(enc, 0, latent_dim_);
  Tensor log_var = slice_cols(enc, latent_dim_, latent_dim_);
  Tensor z = train ? gaussian_sample(mu, log_var, rng) : mu;
  Tensor hd = dropout(relu(dec_hidden_.forward(z)), dropout_p_, rng, train);
  Tensor out = dec_out_.forward(hd);

  AugmentResult res;
  int off = 0;
  for (int d : feature_dims_) {
    res.features.push_back(feature_dims_.size() == 1 ? out : slice_cols(out, off, d));
    off += d;
  }
  res.kl = standard_normal_kl(mu, log_var);
  return res;
}

ParameterSet MlpVae::params() const {
  ParameterSet ps;
  enc_hidden_.collect(ps, "vae.enc_hidden");
  enc_out_.collect(ps, "vae.enc_out");
  dec_hidden_.collect(ps, "vae.dec_hidden");
  dec_out_.collect(ps, "vae.dec_out");
  return ps;
}

// ---------------------------------------------------------------------------
// AttentionVae

AttentionVae::AttentionVae(std::vector<int> feature_dims, const Config& cfg, Rng& rng)
    : feature_dims_(std::move(feature_dims)), cfg_(cfg) {
  if (feature_dims_.empty()) throw std::invalid_argument("AttentionVae: need at least one modality");
  for (int d : feature_dims_) {
    in_proj_.emplace_back(d, cfg_.d_model, rng);
  }
  for (int l = 0; l < cfg_.layers; ++l) {
    enc_blocks_.emplace_back(cfg_.d_model, cfg_.heads, cfg_.ff_hidden, cfg_.dropout_p, rng);
  }
  to_latent_ = Linear(cfg_.d_model, 2 * cfg_.latent_dim, rng);
  init_log_var_head(to_latent_, cfg_.latent_dim, -2.0);
  from_latent_ = Linear(cfg_.latent_dim, cfg_.d_model, rng);
  for (int l = 0; l < cfg_.layers; ++l) {
    dec_blocks_.emplace_back(cfg_.d_model, cfg_.heads, cfg_.ff_hidden, cfg_.dropout_p, rng);
  }
  for (int d : feature_dims_) {
    out_proj_.emplace_back(cfg_.d_model, d, rng);
  }
}

AugmentResult AttentionVae::augment(const std::vector<Tensor>& features, Rng& rng, bool train) const {
  check_features(feature_dims_, features);
  const int n = static_cast<int>(features.size());
  std::vector<Tensor> proj;
  proj.reserve(features.size());
  for (int i = 0; i < n; ++i) {
    proj.push_back(in_proj_[static_cast<std::size_t>(i)].forward(features[static_cast<std::size_t>(i)]));
  }
  Tensor x = stack_tokens(proj);  // [b, n, d_model]
  for (const auto& block : enc_blocks_) x = block.forward(x, rng, train);

  Tensor enc = to_latent_.forward(x);  // [b, n, 2*latent]
  const int b = enc.dim(0);
  Tensor enc2 = reshape(enc, Shape{b * n, 2 * cfg_.latent_dim});
  Tensor mu = slice_cols(enc2, 0, cfg_.latent_dim);
  Tensor log_var = slice_cols(enc2, cfg_.latent_dim, cfg_.latent_dim);
  Tensor z = train ? gaussian_sample(mu, log_var, rng) : mu;

  Tensor y = reshape(from_latent_.forward(z), Shape{b, n, cfg_.d_model});
  for (const auto& block : dec_blocks_) y = block.forward(y, rng, train);

  AugmentResult res;
  std::vector<Tensor> toks = unstack_tokens(y);
  for (int i = 0; i < n; ++i) {
    res.features.push_back(out_proj_[static_cast<std::size_t>(i)].forward(toks[static_cast<std::size_t>(i)]));
  }
  // Per-sample KL sums over every token's latent dims; mu rows are [b*n, L],
  // so rescale the per-row mean back to a per-sample mean.
  res.kl = mul_scalar(standard_normal_kl(mu, log_var), static_cast<double>(n));
  return res;
}

ParameterSet AttentionVae::params() const {
  ParameterSet ps;
  for (std::size_t i = 0; i < in_proj_.size(); ++i) {
    in_proj_[i].collect(ps, "avae.in" + std::to_string(i));
  }
  for (std::size_t l = 0; l < enc_blocks_.size(); ++l) {
    enc_blocks_[l].collect(ps, "avae.enc" + std::to_string(l));
  }
  to_latent_.collect(ps, "avae.to_latent");
  from_latent_.collect(ps, "avae.from_latent");
  for (std::size_t l = 0; l < dec_blocks_.size(); ++l) {
    dec_blocks_[l].collect(ps, "avae.dec" + std::to_string(l));
  }
  for (std::size_t i = 0; i < out_proj_.size(); ++i) {
    out_proj_[i].collect(ps, "avae.out" + std::to_string(i));
  }
  return ps;
}

}  // namespace lemda
