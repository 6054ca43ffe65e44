#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gazefusion/datagen.hpp"
#include "gazefusion/metrics.hpp"
#include "gazefusion/model.hpp"
#include "gazefusion/train.hpp"

namespace py = pybind11;
using namespace gf;

namespace {

py::array_t<double> tensor_to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
  py::array_t<double> out(shape);
  std::copy(t.v.begin(), t.v.end(), out.mutable_data());
  return out;
}

Tensor array_to_tensor(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  std::vector<int> shape;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape.push_back(static_cast<int>(a.shape(i)));
  Tensor t(shape);
  std::copy(a.data(), a.data() + a.size(), t.v.begin());
  return t;
}

ImagePlane array_to_plane(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  Tensor t = array_to_tensor(a);
  if (t.rank() == 2) t.shape = {1, t.dim(0), t.dim(1)};
  GF_CHECK(t.rank() == 3, "image arrays must be [c,h,w] or [h,w]");
  ImagePlane p;
  p.data = std::move(t);
  return p;
}

GazeAnnotation points_to_annotation(const std::vector<std::pair<double, double>>& pts) {
  GazeAnnotation ann;
  for (const auto& [x, y] : pts) ann.points.push_back(GazePoint{x, y});
  return ann;
}

HeatmapGrid array_to_heatmap(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  GF_CHECK(a.ndim() == 2, "heatmaps must be 2-D");
  HeatmapGrid hm(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), hm.data.v.begin());
  return hm;
}

}  // namespace

PYBIND11_MODULE(_gazefusion, m) {
  m.doc() = "three-pathway RGB-D gaze target detection with domain adaptation";

  py::register_exception<Error>(m, "GazefusionError");

  py::class_<HeadBox>(m, "HeadBox")
      .def(py::init([](double x0, double y0, double x1, double y1) {
             return HeadBox{x0, y0, x1, y1};
           }),
           py::arg("x_min"), py::arg("y_min"), py::arg("x_max"), py::arg("y_max"))
      .def_readwrite("x_min", &HeadBox::x_min)
      .def_readwrite("y_min", &HeadBox::y_min)
      .def_readwrite("x_max", &HeadBox::x_max)
      .def_readwrite("y_max", &HeadBox::y_max);

  py::class_<Sample>(m, "Sample")
      .def_property_readonly("scene", [](const Sample& s) { return tensor_to_array(s.scene.data); })
      .def_property_readonly("depth", [](const Sample& s) { return tensor_to_array(s.depth.data); })
      .def_readonly("head_box", &Sample::head_box)
      .def_property_readonly("gaze_points",
                             [](const Sample& s) {
                               std::vector<std::pair<double, double>> pts;
                               for (const auto& p : s.annotation.points)
                                 pts.emplace_back(p.x, p.y);
                               return pts;
                             })
      .def_property_readonly("domain", [](const Sample& s) { return s.domain.name; })
      .def_readonly("sample_id", &Sample::sample_id);

  py::class_<SynthSpec>(m, "SynthSpec")
      .def(py::init<>())
      .def_readwrite("image_size", &SynthSpec::image_size)
      .def_readwrite("n_samples", &SynthSpec::n_samples)
      .def_readwrite("seed", &SynthSpec::seed)
      .def_readwrite("distractor_count", &SynthSpec::distractor_count)
      .def_readwrite("on_ray_distractor_prob", &SynthSpec::on_ray_distractor_prob)
      .def_property(
          "domain_style",
          [](const SynthSpec& s) { return std::string(to_string(s.domain_style)); },
          [](SynthSpec& s, const std::string& v) {
            GF_CHECK(v == "style_a" || v == "style_b", "domain_style must be style_a or style_b");
            s.domain_style = v == "style_a" ? DomainStyle::style_a : DomainStyle::style_b;
          });

  m.def("generate_synthetic", [](const SynthSpec& spec) { return generate_synthetic(spec); },
        py::arg("spec"), "Deterministic synthetic gaze scenes");

  m.def("validate_sample", &validate_sample, py::arg("sample"),
        "Invariant violations, empty when valid");

  m.def("save_dataset",
        [](const std::vector<Sample>& samples, const std::filesystem::path& dir) {
          save_dataset(samples, dir);
        },
        py::arg("samples"), py::arg("dir"));
  m.def("load_annotations",
        [](const std::filesystem::path& file, const std::filesystem::path& root) {
          return load_annotations(file, root);
        },
        py::arg("file"), py::arg("image_root"));

  m.def("render_head_mask",
        [](const HeadBox& box, int size) { return tensor_to_array(render_head_mask(box, size)); },
        py::arg("box"), py::arg("size"));
  m.def("render_gt_heatmap",
        [](const std::vector<std::pair<double, double>>& pts, int grid) {
          return tensor_to_array(render_gt_heatmap(points_to_annotation(pts), grid).data);
        },
        py::arg("points"), py::arg("grid") = 64);
  m.def("colorize_depth",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& depth) {
          return tensor_to_array(colorize_depth(array_to_plane(depth)));
        },
        py::arg("depth"), "Min-max normalize then apply the magma LUT");
  m.def("crop_head",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& scene,
           const HeadBox& box, int out_size) {
          return tensor_to_array(crop_head(array_to_plane(scene), box, out_size));
        },
        py::arg("scene"), py::arg("box"), py::arg("out_size"));

  m.def("heatmap_auc",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pred,
           const std::vector<std::pair<double, double>>& pts) {
          return heatmap_auc(array_to_heatmap(pred), points_to_annotation(pts));
        },
        py::arg("pred"), py::arg("gaze_points"));
  m.def("avg_distance",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pred,
           const std::vector<std::pair<double, double>>& pts) {
          return avg_distance(array_to_heatmap(pred), points_to_annotation(pts));
        },
        py::arg("pred"), py::arg("gaze_points"));

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_static("toy", &ModelConfig::toy, py::arg("input_size") = 64,
                  py::arg("channels") = 32, py::arg("seed") = 0)
      .def_readwrite("input_size", &ModelConfig::input_size)
      .def_readwrite("heatmap_size", &ModelConfig::heatmap_size)
      .def_readwrite("backbone_channels", &ModelConfig::backbone_channels)
      .def_readwrite("da_enabled", &ModelConfig::da_enabled)
      .def_readwrite("grl_lambda", &ModelConfig::grl_lambda)
      .def_readwrite("seed", &ModelConfig::seed)
      .def_property(
          "fusion_variant",
          [](const ModelConfig& c) { return std::string(to_string(c.fusion_variant)); },
          [](ModelConfig& c, const std::string& v) {
            auto fv = fusion_variant_from_string(v);
            GF_CHECK(fv.has_value(), "unknown fusion variant '%s'", v.c_str());
            c.fusion_variant = *fv;
          });

  py::class_<GazeModel>(m, "GazeModel")
      .def(py::init<const ModelConfig&>(), py::arg("config"))
      .def_property_readonly("config", &GazeModel::config)
      .def("predict",
           [](const GazeModel& model, const Sample& sample) {
             const ModelInput in = build_model_input(sample, model.config());
             const ModelOutput out = model.predict(in);
             return py::make_tuple(tensor_to_array(out.heatmap), out.inout_probability());
           },
           py::arg("sample"), "Returns (heatmap, inout_probability)")
      .def("parameter_count", [](const GazeModel& model) {
        int64_t n = 0;
        for (const auto& p : model.parameters()) n += p.node->val.numel();
        return n;
      });

  m.def("save_checkpoint",
        [](const std::filesystem::path& path, const GazeModel& model) {
          save_checkpoint(path, model);
        },
        py::arg("path"), py::arg("model"));
  m.def("load_model",
        [](const std::filesystem::path& path) {
          return model_from_checkpoint(load_checkpoint(path));
        },
        py::arg("path"));

  m.def("train_toy",
        [](GazeModel& model, const std::vector<Sample>& samples, int steps, double lr,
           int batch_size) {
          GF_CHECK(!samples.empty(), "train_toy: no samples");
          Optimizer opt(OptimizerKind::adam_like, lr, model.parameters());
          const LossWeights w = LossWeights::make_fixed(
              {{LossTerm::heatmap, 100.0}, {LossTerm::inout, 1.0}});
          std::vector<TrainItem> items;
          for (const auto& s : samples) items.push_back(prepare_item(s, model.config()));
          std::vector<double> losses;
          for (int step = 0; step < steps; ++step) {
            const size_t lo = (step * batch_size) % items.size();
            std::vector<TrainItem> batch;
            for (int i = 0; i < batch_size; ++i)
              batch.push_back(items[(lo + i) % items.size()]);
            losses.push_back(train_step(model, opt, batch, w).total);
          }
          return losses;
        },
        py::arg("model"), py::arg("samples"), py::arg("steps") = 10, py::arg("lr") = 1e-3,
        py::arg("batch_size") = 8,
        "Runs a few optimizer steps and returns the loss sequence");

  m.def("set_num_threads", &set_num_threads, py::arg("n"));
  m.attr("__version__") = "0.1.0";
}
