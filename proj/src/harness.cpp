#include "lemda/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "lemda/datagen.hpp"
#include "lemda/metrics.hpp"

namespace lemda {

namespace {

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<std::string> resolve_toggles(const ExperimentConfig& cfg, const Dataset& data) {
  std::vector<std::string> toggles;
  if (cfg.augment_modalities == "all") {
    for (const auto& spec : data.specs) toggles.push_back(spec.name);
  } else {
    std::string cur;
    std::istringstream is(cfg.augment_modalities);
    while (std::getline(is, cur, ',')) {
      const auto a = cur.find_first_not_of(" \t");
      if (a == std::string::npos) continue;
      const auto b = cur.find_last_not_of(" \t");
      cur = cur.substr(a, b - a + 1);
      bool known = false;
      for (const auto& spec : data.specs) known = known || spec.name == cur;
      if (!known) throw ConfigError("augment_modalities names unknown modality '" + cur + "'");
      toggles.push_back(cur);
    }
  }
  return toggles;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  const double m = s / static_cast<double>(xs.size());
  double s2 = 0.0;
  for (double x : xs) s2 += (x - m) * (x - m);
  const double sd = xs.size() > 1 ? std::sqrt(s2 / static_cast<double>(xs.size() - 1)) : 0.0;
  return {m, sd};
}

}  // namespace

Dataset build_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset == "complementary") {
    return gen_complementary({cfg.n_train, cfg.n_val, cfg.n_test}, cfg.noise, cfg.data_seed);
  }
  if (cfg.dataset == "perfect_correlation") {
    return gen_perfect_correlation({cfg.n_train, cfg.n_val, cfg.n_test}, cfg.num_classes, cfg.noise,
                                   cfg.data_seed);
  }
  IngestSchema schema;
  schema.label_column = cfg.label_col;
  schema.numeric_columns = cfg.numeric_cols;
  schema.text_columns = cfg.text_cols;
  schema.categorical_columns = cfg.categorical_cols;
  schema.max_len = cfg.max_len;
  schema.feature_dim = cfg.feature_dim;
  schema.seed = cfg.data_seed;
  return ingest_tabular_text(cfg.ingest_path, schema);
}

TaskNetwork build_task_network(const ExperimentConfig& cfg, const Dataset& data, Rng& rng) {
  std::vector<ModalitySpec> specs = data.specs;
  for (auto& s : specs) s.feature_dim = cfg.feature_dim;
  return TaskNetwork(specs, data.num_classes, cfg.hidden, cfg.emb_dim, rng);
}

std::unique_ptr<AugmentationNetwork> build_augnet(const ExperimentConfig& cfg,
                                                  const TaskNetwork& net, Rng& rng) {
  if (cfg.augmentation == "lemda_mlp_vae") {
    return std::make_unique<MlpVae>(net.feature_dims(), cfg.latent_dim, cfg.vae_hidden,
                                    cfg.vae_dropout, rng);
  }
  if (cfg.augmentation == "lemda_attention_vae") {
    AttentionVae::Config acfg;
    acfg.latent_dim = cfg.latent_dim;
    acfg.d_model = cfg.attn_d_model;
    acfg.layers = cfg.attn_layers;
    acfg.heads = cfg.attn_heads;
    acfg.ff_hidden = cfg.attn_ff;
    acfg.dropout_p = cfg.attn_dropout;
    return std::make_unique<AttentionVae>(net.feature_dims(), acfg, rng);
  }
  return nullptr;
}

TrainConfig build_train_config(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.augment = cfg.augment_choice();
  if (cfg.is_baseline()) {
    tc.baseline.kind = cfg.baseline_kind();
    tc.baseline.alpha = cfg.mixup_alpha;
    tc.baseline.lambda = cfg.mixgen_lambda;
    tc.baseline.toggles = resolve_toggles(cfg, data);
  }
  tc.weights = LossWeights{cfg.w1, cfg.w2, cfg.w3, cfg.alpha_conf};
  tc.regularizer = regularizer_from_string(cfg.regularizer);
  tc.optimizer = optimizer_kind_from_string(cfg.optimizer);
  tc.lr_f = cfg.lr_f;
  tc.lr_g = cfg.lr_g;
  tc.g_update_every = cfg.g_update_every;
  tc.early_stop_patience = cfg.early_stop_patience;
  tc.seed = seed;
  tc.record_steps = cfg.verbose_steps;
  return tc;
}

SeedRunResult run_one_seed(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed) {
  SeedRunResult res;
  res.seed = seed;

  Rng net_rng(seed_stream(seed, 0x11e7u));
  TaskNetwork f = build_task_network(cfg, data, net_rng);
  std::unique_ptr<AugmentationNetwork> g = build_augnet(cfg, f, net_rng);
  TrainConfig tc = build_train_config(cfg, data, seed);

  const auto t0 = std::chrono::steady_clock::now();
  res.history = train(f, g.get(), data, tc);
  const auto t1 = std::chrono::steady_clock::now();
  res.wall_seconds = std::chrono::duration<double>(t1 - t0).count();

  std::int64_t steps = 0;
  const std::int64_t per_epoch =
      (static_cast<std::int64_t>(data.train_idx.size()) + cfg.batch_size - 1) / cfg.batch_size;
  steps = per_epoch * static_cast<std::int64_t>(res.history.epochs.size());
  res.steps_per_second = res.wall_seconds > 0.0 ? static_cast<double>(steps) / res.wall_seconds : 0.0;

  res.val_accuracy = res.history.final_val_accuracy;
  const auto& eval_idx = data.test_idx.empty() ? data.train_idx : data.test_idx;
  res.test_accuracy = evaluate_accuracy(f, data, eval_idx);

  if (data.num_classes == 2) {
    std::vector<double> scores;
    std::vector<int> labels;
    NoGradGuard ng;
    for (std::size_t pos = 0; pos < eval_idx.size(); pos += 256) {
      const std::size_t end = std::min(eval_idx.size(), pos + 256);
      std::vector<int> idx(eval_idx.begin() + static_cast<long>(pos), eval_idx.begin() + static_cast<long>(end));
      MultimodalBatch batch = data.make_batch(idx);
      Tensor probs = softmax(f.forward(batch));
      for (int r = 0; r < batch.size(); ++r) {
        scores.push_back(probs.at({r, 1}));
        labels.push_back(batch.labels[static_cast<std::size_t>(r)]);
      }
    }
    res.roc_auc = roc_auc(scores, labels);
  } else {
    res.roc_auc = std::numeric_limits<double>::quiet_NaN();
  }
  return res;
}

RunResult run(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  Dataset data = build_dataset(cfg);

  RunResult result;
  for (std::uint64_t seed : cfg.seeds) {
    result.per_seed.push_back(run_one_seed(cfg, data, seed));
  }

  std::vector<double> accs, thr;
  for (const auto& r : result.per_seed) {
    accs.push_back(r.test_accuracy);
    thr.push_back(r.steps_per_second);
  }
  auto [m, sd] = mean_std(accs);
  result.mean_test_accuracy = m;
  result.std_test_accuracy = sd;
  auto [tm, tsd] = mean_std(thr);
  (void)tsd;
  result.mean_throughput = tm;
  result.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);

  std::ostringstream metrics;
  metrics << "seed,val_accuracy,test_accuracy,roc_auc\n";
  for (const auto& r : result.per_seed) {
    metrics << r.seed << "," << fmt_g(r.val_accuracy) << "," << fmt_g(r.test_accuracy) << ","
            << fmt_g(r.roc_auc) << "\n";
  }
  write_file((fs::path(cfg.output_dir) / "metrics.csv").string(), metrics.str());

  std::ostringstream curves;
  curves << "seed,epoch,train_task_loss,consistency,vae_kl,mask_fraction,val_accuracy\n";
  for (const auto& r : result.per_seed) {
    for (const auto& e : r.history.epochs) {
      curves << r.seed << "," << e.epoch << "," << fmt_g(e.train_task_loss) << ","
             << fmt_g(e.consistency) << "," << fmt_g(e.vae_kl) << "," << fmt_g(e.mask_fraction) << ","
             << fmt_g(e.val_accuracy) << "\n";
    }
  }
  write_file((fs::path(cfg.output_dir) / "curves.csv").string(), curves.str());

  if (cfg.verbose_steps) {
    std::ostringstream steps;
    steps << "seed,step,task_loss_orig,task_loss_aug,consistency,vae_kl,mask_fraction\n";
    for (const auto& r : result.per_seed) {
      for (const auto& s : r.history.steps) {
        steps << r.seed << "," << s.step_index << "," << fmt_g(s.task_loss_orig) << ","
              << fmt_g(s.task_loss_aug) << "," << fmt_g(s.consistency_loss) << "," << fmt_g(s.vae_kl)
              << "," << fmt_g(s.mask_fraction) << "\n";
      }
    }
    write_file((fs::path(cfg.output_dir) / "steps.csv").string(), steps.str());
  }

  write_file((fs::path(cfg.output_dir) / "config.echo").string(), cfg.echo());

  std::cout << "dataset=" << cfg.dataset << " augmentation=" << cfg.augmentation << " seeds="
            << result.per_seed.size() << "\n";
  std::cout << "test_accuracy " << fmt_g(result.mean_test_accuracy) << " +- "
            << fmt_g(result.std_test_accuracy) << "\n";
  std::cout << "throughput " << fmt_g(result.mean_throughput) << " steps/s, wall "
            << fmt_g(result.wall_clock_seconds) << " s\n";
  return result;
}

// ---------------------------------------------------------------------------
// Ablation suites.

namespace {

struct Cell {
  std::string label;
  ExperimentConfig cfg;
};

std::vector<Cell> expand_suite(const ExperimentConfig& base, const std::string& suite) {
  std::vector<Cell> cells;
  auto lemda_base = base;
  if (!lemda_base.is_lemda()) lemda_base.augmentation = "lemda_mlp_vae";

  if (suite == "regularizer") {
    for (const char* reg : {"none", "consistency", "l2", "consistency_l2"}) {
      auto c = lemda_base;
      c.regularizer = reg;
      cells.push_back({std::string("regularizer=") + reg, c});
    }
  } else if (suite == "architecture") {
    for (const char* aug : {"lemda_mlp_vae", "lemda_attention_vae"}) {
      auto c = lemda_base;
      c.augmentation = aug;
      cells.push_back({std::string("architecture=") + aug, c});
    }
  } else if (suite == "confidence") {
    for (double alpha : {0.0, 0.3, 0.5, 0.8}) {
      auto c = lemda_base;
      c.alpha_conf = alpha;
      cells.push_back({"alpha=" + fmt_g(alpha), c});
    }
  } else if (suite == "weights") {
    const double grid[6][3] = {{1e-4, 0.1, 0.1}, {1e-4, 0.01, 0.01}, {5e-3, 0.1, 0.1},
                               {5e-3, 0.01, 0.01}, {1e-3, 0.1, 0.1}, {1e-3, 0.01, 0.01}};
    for (const auto& w : grid) {
      auto c = lemda_base;
      c.w1 = w[0];
      c.w2 = w[1];
      c.w3 = w[2];
      cells.push_back({"w=(" + fmt_g(w[0]) + "," + fmt_g(w[1]) + "," + fmt_g(w[2]) + ")", c});
    }
  } else if (suite == "single_modality") {
    Dataset probe = build_dataset(base);
    std::vector<std::string> names;
    for (const auto& s : probe.specs) names.push_back(s.name);
    for (const char* kind : {"input_aug", "mixup", "manifold_mixup", "mixgen"}) {
      for (std::size_t m = 0; m <= names.size(); ++m) {
        auto c = base;
        c.augmentation = kind;
        const std::string toggle = m < names.size() ? names[m] : "all";
        c.augment_modalities = toggle;
        cells.push_back({std::string(kind) + ":" + toggle, c});
      }
    }
  } else {
    throw ConfigError("unknown ablation suite '" + suite +
                      "' (expected regularizer, architecture, confidence, weights, single_modality)");
  }
  return cells;
}

}  // namespace

std::vector<AblationRow> ablation_suite(const ExperimentConfig& base, const std::string& suite) {
  base.validate();
  std::vector<Cell> cells = expand_suite(base, suite);
  std::vector<AblationRow> rows;

  Dataset data = build_dataset(base);
  for (const auto& cell : cells) {
    AblationRow row;
    row.suite = suite;
    row.cell = cell.label;
    std::vector<double> accs;
    try {
      for (std::uint64_t seed : cell.cfg.seeds) {
        accs.push_back(run_one_seed(cell.cfg, data, seed).test_accuracy);
      }
    } catch (const std::invalid_argument& e) {
      // A cell can be inapplicable (e.g. mixgen without a token modality).
      row.applicable = false;
      row.n_seeds = 0;
      rows.push_back(row);
      std::cout << suite << " " << cell.label << " skipped: " << e.what() << "\n";
      continue;
    }
    auto [m, sd] = mean_std(accs);
    row.mean_accuracy = m;
    row.std_accuracy = sd;
    row.n_seeds = static_cast<int>(accs.size());
    rows.push_back(row);
    std::cout << suite << " " << cell.label << " accuracy " << fmt_g(m) << " +- " << fmt_g(sd) << "\n";
  }

  namespace fs = std::filesystem;
  fs::create_directories(base.output_dir);
  write_file((fs::path(base.output_dir) / ("ablation_" + suite + ".csv")).string(), ablation_csv(rows));
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "suite,cell,mean_accuracy,std_accuracy,n_seeds,applicable\n";
  for (const auto& r : rows) {
    os << r.suite << "," << r.cell << "," << fmt_g(r.mean_accuracy) << "," << fmt_g(r.std_accuracy)
       << "," << r.n_seeds << "," << (r.applicable ? "true" : "false") << "\n";
  }
  return os.str();
}

ThroughputReport measure_throughput(const ExperimentConfig& cfg, int warmup_steps, int timed_steps) {
  cfg.validate();
  if (timed_steps < 10) throw std::invalid_argument("measure_throughput: timed_steps must be >= 10");
  Dataset data = build_dataset(cfg);
  const std::uint64_t seed = cfg.seeds[0];

  Rng net_rng(seed_stream(seed, 0x11e7u));
  TaskNetwork f = build_task_network(cfg, data, net_rng);
  std::unique_ptr<AugmentationNetwork> g = build_augnet(cfg, f, net_rng);
  TrainConfig tc = build_train_config(cfg, data, seed);
  Optimizer opt_f = Optimizer::make(tc.optimizer, tc.lr_f);
  opt_f.attach(f.params());
  Optimizer opt_g = Optimizer::make(tc.optimizer, tc.lr_g);
  if (g) opt_g.attach(g->params());
  Rng rng(seed_stream(seed, 0x7EA1ull));

  std::vector<int> order = data.train_idx;
  std::size_t cursor = 0;
  auto next_batch = [&]() {
    std::vector<int> idx;
    for (int i = 0; i < tc.batch_size; ++i) {
      if (cursor == order.size()) cursor = 0;
      idx.push_back(order[cursor++]);
    }
    return data.make_batch(idx);
  };

  auto one_step = [&](std::int64_t step) {
    MultimodalBatch batch = next_batch();
    training_step(f, g.get(), batch, tc, opt_f, opt_g, rng, step);
  };

  for (int i = 0; i < warmup_steps; ++i) one_step(i);
  std::vector<double> secs;
  secs.reserve(static_cast<std::size_t>(timed_steps));
  for (int i = 0; i < timed_steps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    one_step(warmup_steps + i);
    secs.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(secs.begin(), secs.end());
  const double median = secs[secs.size() / 2];

  ThroughputReport rep;
  rep.steps_per_second = median > 0.0 ? 1.0 / median : 0.0;
  rep.examples_per_second = rep.steps_per_second * tc.batch_size;
  rep.warmup_steps = warmup_steps;
  rep.timed_steps = timed_steps;
  return rep;
}

}  // namespace lemda
