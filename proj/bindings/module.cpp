#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lemda/augnet.hpp"
#include "lemda/baselines.hpp"
#include "lemda/config.hpp"
#include "lemda/datagen.hpp"
#include "lemda/figure3.hpp"
#include "lemda/harness.hpp"
#include "lemda/metrics.hpp"
#include "lemda/tensor.hpp"
#include "lemda/trainer.hpp"

namespace py = pybind11;

namespace {

lemda::Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  lemda::Shape shape;
  for (py::ssize_t i = 0; i < arr.ndim(); ++i) shape.push_back(static_cast<int>(arr.shape(i)));
  std::vector<double> data(arr.data(), arr.data() + arr.size());
  return lemda::Tensor(std::move(shape), std::move(data));
}

py::array_t<double> array_from_tensor(const lemda::Tensor& t) {
  std::vector<py::ssize_t> shape;
  for (int d : t.shape()) shape.push_back(d);
  py::array_t<double> out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::dict seed_result_dict(const lemda::SeedRunResult& r) {
  py::dict d;
  d["seed"] = r.seed;
  d["val_accuracy"] = r.val_accuracy;
  d["test_accuracy"] = r.test_accuracy;
  d["roc_auc"] = r.roc_auc;
  d["steps_per_second"] = r.steps_per_second;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Learned multimodal feature-space augmentation: tensor ops, generators, and runners";

  // --- numeric ops on numpy arrays ---
  m.def("matmul", [](py::array_t<double> a, py::array_t<double> b) {
    return array_from_tensor(lemda::matmul(tensor_from_array(a), tensor_from_array(b)));
  });
  m.def("softmax", [](py::array_t<double> logits) {
    return array_from_tensor(lemda::softmax(tensor_from_array(logits)));
  });
  m.def("cross_entropy", [](py::array_t<double> logits, std::vector<int> labels) {
    return lemda::cross_entropy(tensor_from_array(logits), labels).value();
  });
  m.def(
      "cross_entropy_grad",
      [](py::array_t<double> logits, std::vector<int> labels) {
        lemda::Tensor t = tensor_from_array(logits);
        lemda::Tensor tracked(t.shape(), t.data(), true);
        lemda::backward(lemda::cross_entropy(tracked, labels));
        lemda::Tensor g(tracked.shape(), tracked.grad());
        return array_from_tensor(g);
      },
      "gradient of the mean cross entropy with respect to the logits");
  m.def("kl_divergence",
        [](py::array_t<double> p_logits, py::array_t<double> q_logits, std::vector<bool> mask) {
          return lemda::kl_divergence(tensor_from_array(p_logits), tensor_from_array(q_logits), mask)
              .value();
        });
  m.def("standard_normal_kl", [](py::array_t<double> mu, py::array_t<double> log_var) {
    return lemda::standard_normal_kl(tensor_from_array(mu), tensor_from_array(log_var)).value();
  });
  m.def("gaussian_sample",
        [](py::array_t<double> mu, py::array_t<double> log_var, std::uint64_t seed) {
          lemda::Rng rng(seed);
          return array_from_tensor(
              lemda::gaussian_sample(tensor_from_array(mu), tensor_from_array(log_var), rng));
        });
  m.def("roc_auc", [](std::vector<double> scores, std::vector<int> labels) {
    return lemda::roc_auc(scores, labels);
  });

  // --- experiment entry points ---
  m.def(
      "run_config_text",
      [](const std::string& text) {
        lemda::RunResult res = lemda::run(lemda::ExperimentConfig::parse_text(text));
        py::dict d;
        d["mean_test_accuracy"] = res.mean_test_accuracy;
        d["std_test_accuracy"] = res.std_test_accuracy;
        d["mean_throughput"] = res.mean_throughput;
        py::list seeds;
        for (const auto& r : res.per_seed) seeds.append(seed_result_dict(r));
        d["per_seed"] = seeds;
        return d;
      },
      "parse a config from text, run it, and return the summary metrics");
  m.def("run_config_file", [](const std::string& path) {
    lemda::RunResult res = lemda::run(lemda::ExperimentConfig::parse_file(path));
    py::dict d;
    d["mean_test_accuracy"] = res.mean_test_accuracy;
    d["std_test_accuracy"] = res.std_test_accuracy;
    py::list seeds;
    for (const auto& r : res.per_seed) seeds.append(seed_result_dict(r));
    d["per_seed"] = seeds;
    return d;
  });
  m.def("config_echo", [](const std::string& text) {
    return lemda::ExperimentConfig::parse_text(text).echo();
  });
  m.def(
      "measure_throughput",
      [](const std::string& text, int warmup, int steps) {
        lemda::ThroughputReport rep =
            lemda::measure_throughput(lemda::ExperimentConfig::parse_text(text), warmup, steps);
        py::dict d;
        d["steps_per_second"] = rep.steps_per_second;
        d["examples_per_second"] = rep.examples_per_second;
        return d;
      },
      py::arg("config_text"), py::arg("warmup") = 5, py::arg("steps") = 30);
  m.def(
      "render_figure3",
      [](const std::string& svg_path, std::uint64_t seed) {
        lemda::Figure3Scenario sc = lemda::render_figure3(svg_path, seed);
        py::dict d;
        d["src"] = py::make_tuple(sc.src.x, sc.src.y);
        d["d1"] = py::make_tuple(sc.d1.x, sc.d1.y);
        d["d2"] = py::make_tuple(sc.d2.x, sc.d2.y);
        d["consistency_d1"] = sc.consistency_d1;
        d["consistency_d2"] = sc.consistency_d2;
        d["task_loss_d1"] = sc.task_loss_d1;
        d["task_loss_d2"] = sc.task_loss_d2;
        return d;
      },
      py::arg("svg_path"), py::arg("seed") = 5);
  m.def(
      "export_dataset",
      [](const std::string& kind, const std::string& path, int n_train, int n_val, int n_test,
         double noise, int num_classes, std::uint64_t seed) {
        lemda::SplitSizes n{n_train, n_val, n_test};
        lemda::Dataset ds = kind == "perfect_correlation"
                                ? lemda::gen_perfect_correlation(n, num_classes, noise, seed)
                                : lemda::gen_complementary(n, noise, seed);
        lemda::export_dataset_csv(ds, path);
        return static_cast<int>(ds.examples.size());
      },
      py::arg("kind"), py::arg("path"), py::arg("n_train") = 200, py::arg("n_val") = 100,
      py::arg("n_test") = 2000, py::arg("noise") = 2.0, py::arg("num_classes") = 3,
      py::arg("seed") = 7);

  m.attr("__version__") = "0.1.0";
}
