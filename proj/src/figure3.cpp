#include "lemda/figure3.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "lemda/datagen.hpp"
#include "lemda/rng.hpp"
#include "lemda/trainer.hpp"

namespace lemda {

namespace {

constexpr double kBlobOffset = 1.2;
constexpr double kBlobSpread = 0.8;
constexpr int kTrainPoints = 240;

int gt_label(double x) { return x > 0.0 ? 1 : 0; }

MultimodalBatch point_batch(const std::vector<ModalitySpec>& specs, double x, double y) {
  MultimodalBatch b;
  b.specs = specs;
  b.modalities.resize(1);
  b.modalities[0].continuous = Tensor(Shape{1, 2}, {x, y});
  b.labels = {0};
  return b;
}

Tensor logits_at(const TaskNetwork& model, double x, double y) {
  NoGradGuard ng;
  return model.forward(point_batch(model.specs(), x, y));
}

Dataset make_plane_dataset(std::uint64_t seed) {
  Rng rng(seed_stream(seed, 0xF163u));
  Dataset ds;
  ds.num_classes = 2;
  ds.specs = {ModalitySpec::continuous("plane", 2, 8)};
  for (int i = 0; i < kTrainPoints; ++i) {
    const double cx = rng.bernoulli(0.5) ? kBlobOffset : -kBlobOffset;
    const double x = cx + kBlobSpread * rng.normal();
    const double y = kBlobSpread * rng.normal();
    MultimodalExample ex;
    ex.label = gt_label(x);  // labels follow the linear ground truth exactly
    ex.values.resize(1);
    ex.values[0].numeric = {x, y};
    ds.examples.push_back(std::move(ex));
  }
  ds.train_idx.resize(ds.examples.size());
  for (std::size_t i = 0; i < ds.examples.size(); ++i) ds.train_idx[i] = static_cast<int>(i);
  return ds;
}

}  // namespace

double figure3_task_loss(const TaskNetwork& model, double x, double y) {
  NoGradGuard ng;
  Tensor logits = logits_at(model, x, y);
  return cross_entropy(logits, {gt_label(x)}).value();
}

double figure3_consistency(const TaskNetwork& model, const ProbePoint& src, double x, double y) {
  NoGradGuard ng;
  Tensor src_logits = logits_at(model, src.x, src.y);
  Tensor p_logits = logits_at(model, x, y);
  return kl_divergence(src_logits, p_logits, {true}).value();
}

int figure3_model_class(const TaskNetwork& model, double x, double y) {
  Tensor logits = logits_at(model, x, y);
  return logits.at({0, 1}) > logits.at({0, 0}) ? 1 : 0;
}

Figure3Scenario gen_figure3_scenario(std::uint64_t seed) {
  constexpr int kMaxAttempts = 100;
  constexpr int kAngles = 144;
  const double rel_tol = 0.05;

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
    Dataset ds = make_plane_dataset(s);

    Rng net_rng(seed_stream(s, 0xF164u));
    TaskNetwork model(ds.specs, 2, 16, 8, net_rng);
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.batch_size = 32;
    cfg.augment = AugmentChoice::none;
    cfg.lr_f = 1e-2;
    cfg.seed = s;
    cfg.record_steps = false;
    train(model, nullptr, ds, cfg);

    // Source candidates: correctly classified points at a moderate distance
    // from the ground-truth boundary.
    std::vector<ProbePoint> candidates;
    for (const auto& ex : ds.examples) {
      const double x = ex.values[0].numeric[0];
      const double y = ex.values[0].numeric[1];
      if (std::abs(x) < 0.25 || std::abs(x) > 1.0) continue;
      if (figure3_model_class(model, x, y) != ex.label) continue;
      candidates.push_back({x, y});
      if (candidates.size() >= 12) break;
    }

    for (const auto& src : candidates) {
      const int src_class = figure3_model_class(model, src.x, src.y);
      for (double radius : {0.5, 0.75, 1.0}) {
        struct Probe {
          double x, y, loss;
          bool crossing;
        };
        std::vector<Probe> probes;
        probes.reserve(kAngles);
        for (int a = 0; a < kAngles; ++a) {
          const double theta = 2.0 * std::numbers::pi * a / kAngles;
          const double px = src.x + radius * std::cos(theta);
          const double py = src.y + radius * std::sin(theta);
          probes.push_back({px, py, figure3_task_loss(model, px, py),
                            figure3_model_class(model, px, py) != src_class});
        }
        int best_i = -1, best_j = -1;
        double best_gap = 1e18;
        for (int i = 0; i < kAngles; ++i) {
          if (probes[static_cast<std::size_t>(i)].crossing) continue;
          for (int j = 0; j < kAngles; ++j) {
            if (!probes[static_cast<std::size_t>(j)].crossing) continue;
            const double gap = std::abs(probes[static_cast<std::size_t>(i)].loss -
                                        probes[static_cast<std::size_t>(j)].loss);
            if (gap < best_gap) {
              best_gap = gap;
              best_i = i;
              best_j = j;
            }
          }
        }
        if (best_i < 0) continue;
        const auto& p1 = probes[static_cast<std::size_t>(best_i)];
        const auto& p2 = probes[static_cast<std::size_t>(best_j)];
        if (best_gap > rel_tol * std::max(p1.loss, p2.loss)) continue;

        Figure3Scenario sc;
        sc.src = src;
        sc.d1 = {p1.x, p1.y};
        sc.d2 = {p2.x, p2.y};
        sc.consistency_d1 = figure3_consistency(model, src, p1.x, p1.y);
        sc.consistency_d2 = figure3_consistency(model, src, p2.x, p2.y);
        if (!(sc.consistency_d2 > sc.consistency_d1)) continue;
        sc.data = std::move(ds);
        sc.model = model;
        sc.src_label = src_class;
        sc.radius = radius;
        sc.task_loss_src = figure3_task_loss(model, src.x, src.y);
        sc.task_loss_d1 = p1.loss;
        sc.task_loss_d2 = p2.loss;
        sc.seed_used = s;
        return sc;
      }
    }
  }
  throw std::runtime_error("gen_figure3_scenario: construction failed after 100 attempts");
}

namespace {

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[40];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

std::string figure3_sidecar_csv(const Figure3Scenario& sc) {
  std::ostringstream os;
  os << "point,x,y,task_loss,consistency,model_class\n";
  auto row = [&](const char* name, const ProbePoint& p, double loss, double consist) {
    os << name << "," << fmt(p.x, "%.10g") << "," << fmt(p.y, "%.10g") << "," << fmt(loss, "%.10g")
       << "," << fmt(consist, "%.10g") << "," << figure3_model_class(sc.model, p.x, p.y) << "\n";
  };
  row("src", sc.src, sc.task_loss_src, 0.0);
  row("d1", sc.d1, sc.task_loss_d1, sc.consistency_d1);
  row("d2", sc.d2, sc.task_loss_d2, sc.consistency_d2);
  return os.str();
}

Figure3Scenario render_figure3(const std::string& svg_path, std::uint64_t seed) {
  Figure3Scenario sc = gen_figure3_scenario(seed);

  constexpr double lo = -3.0, hi = 3.0;
  constexpr int kGrid = 60;
  constexpr int kCanvas = 640;
  const double cell = static_cast<double>(kCanvas) / kGrid;
  auto to_px = [&](double v) { return (v - lo) / (hi - lo) * kCanvas; };
  auto to_py = [&](double v) { return kCanvas - (v - lo) / (hi - lo) * kCanvas; };

  // Loss field over the grid, then normalized to shading intensity.
  std::vector<double> losses(static_cast<std::size_t>(kGrid) * kGrid);
  double max_loss = 1e-9;
  for (int gy = 0; gy < kGrid; ++gy) {
    for (int gx = 0; gx < kGrid; ++gx) {
      const double x = lo + (gx + 0.5) * (hi - lo) / kGrid;
      const double y = lo + (gy + 0.5) * (hi - lo) / kGrid;
      const double l = figure3_task_loss(sc.model, x, y);
      losses[static_cast<std::size_t>(gy) * kGrid + gx] = l;
      max_loss = std::max(max_loss, l);
    }
  }

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kCanvas << "\" height=\"" << kCanvas
      << "\" viewBox=\"0 0 " << kCanvas << " " << kCanvas << "\">\n";
  svg << "<title>Consistency-loss preference across the model decision boundary</title>\n";
  for (int gy = 0; gy < kGrid; ++gy) {
    for (int gx = 0; gx < kGrid; ++gx) {
      const double t = losses[static_cast<std::size_t>(gy) * kGrid + gx] / max_loss;
      const int shade = 250 - static_cast<int>(190.0 * t);
      svg << "<rect x=\"" << fmt(gx * cell) << "\" y=\"" << fmt(kCanvas - (gy + 1) * cell)
          << "\" width=\"" << fmt(cell + 0.5) << "\" height=\"" << fmt(cell + 0.5) << "\" fill=\"rgb("
          << shade << "," << shade << "," << shade << ")\"/>\n";
    }
  }

  // Ground-truth boundary: the vertical line x = 0.
  svg << "<line x1=\"" << fmt(to_px(0.0)) << "\" y1=\"0\" x2=\"" << fmt(to_px(0.0)) << "\" y2=\""
      << kCanvas << "\" stroke=\"#1a7f1a\" stroke-width=\"2.5\"/>\n";

  // Model boundary: per horizontal scanline, the sign change of the class-1
  // margin, linearly interpolated.
  svg << "<polyline fill=\"none\" stroke=\"#1a7f1a\" stroke-width=\"2.5\" stroke-dasharray=\"8,6\" points=\"";
  constexpr int kScan = 121;
  for (int sy = 0; sy < kScan; ++sy) {
    const double y = lo + sy * (hi - lo) / (kScan - 1);
    double prev_margin = 0.0;
    bool have_prev = false;
    for (int sx = 0; sx < kScan; ++sx) {
      const double x = lo + sx * (hi - lo) / (kScan - 1);
      Tensor logits = logits_at(sc.model, x, y);
      const double margin = logits.at({0, 1}) - logits.at({0, 0});
      if (have_prev && ((prev_margin <= 0.0) != (margin <= 0.0))) {
        const double x_prev = lo + (sx - 1) * (hi - lo) / (kScan - 1);
        const double frac = prev_margin / (prev_margin - margin);
        const double bx = x_prev + frac * (x - x_prev);
        svg << fmt(to_px(bx)) << "," << fmt(to_py(y)) << " ";
        break;
      }
      prev_margin = margin;
      have_prev = true;
    }
  }
  svg << "\"/>\n";

  auto draw_point = [&](const ProbePoint& p, const char* name, double consist, const char* color) {
    svg << "<circle class=\"probe-point\" cx=\"" << fmt(to_px(p.x)) << "\" cy=\"" << fmt(to_py(p.y))
        << "\" r=\"6\" fill=\"" << color << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(to_px(p.x) + 9) << "\" y=\"" << fmt(to_py(p.y) - 6)
        << "\" font-family=\"sans-serif\" font-size=\"15\">" << name << " (consist=" << fmt(consist, "%.4f")
        << ")</text>\n";
  };
  draw_point(sc.src, "src", 0.0, "#f2c230");
  draw_point(sc.d1, "D1", sc.consistency_d1, "#3273dc");
  draw_point(sc.d2, "D2", sc.consistency_d2, "#dc3232");
  svg << "</svg>\n";

  std::ofstream out(svg_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write SVG: " + svg_path);
  out << svg.str();

  std::string csv_path = svg_path;
  if (csv_path.size() > 4 && csv_path.substr(csv_path.size() - 4) == ".svg") {
    csv_path = csv_path.substr(0, csv_path.size() - 4) + ".csv";
  } else {
    csv_path += ".csv";
  }
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write sidecar CSV: " + csv_path);
  csv << figure3_sidecar_csv(sc);
  return sc;
}

}  // namespace lemda
