#pragma once

#include <cstdint>
#include <string>

#include "lemda/data.hpp"
#include "lemda/fusion.hpp"

namespace lemda {

struct ProbePoint {
  double x = 0.0;
  double y = 0.0;
};

// Decision-boundary certificate: a 2-D binary task with a known linear
// ground-truth boundary (x = 0), a probe model trained on it, and two points
// equidistant from a source point that carry near-equal task loss while
// sitting on opposite sides of the model's boundary. The consistency loss
// (KL from the source's output distribution) must prefer the non-crossing
// point.
struct Figure3Scenario {
  Dataset data;
  TaskNetwork model;
  ProbePoint src, d1, d2;
  int src_label = 0;        // model class at src == ground-truth label at src
  double radius = 0.0;
  double task_loss_src = 0.0;
  double task_loss_d1 = 0.0;
  double task_loss_d2 = 0.0;
  double consistency_d1 = 0.0;
  double consistency_d2 = 0.0;
  std::uint64_t seed_used = 0;
};

// Construction retries up to 100 derived seeds (retrain + research each
// time) and throws if the geometric postconditions cannot be met.
Figure3Scenario gen_figure3_scenario(std::uint64_t seed);

// Task loss at a feature point: cross-entropy of the model's logits against
// the ground-truth label of that location (right half-plane = class 1).
double figure3_task_loss(const TaskNetwork& model, double x, double y);

// Consistency loss of a probe point against the source distribution.
double figure3_consistency(const TaskNetwork& model, const ProbePoint& src, double x, double y);

int figure3_model_class(const TaskNetwork& model, double x, double y);

std::string figure3_sidecar_csv(const Figure3Scenario& sc);

// Writes the SVG (heat shading, both boundaries, annotated probe points) and
// a sidecar CSV next to it (.svg swapped for .csv, or .csv appended).
Figure3Scenario render_figure3(const std::string& svg_path, std::uint64_t seed);

}  // namespace lemda
