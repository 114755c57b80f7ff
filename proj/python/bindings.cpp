#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <numbers>
#include <optional>

#include "palmline/container.hpp"
#include "palmline/dataset.hpp"
#include "palmline/error.hpp"
#include "palmline/features.hpp"
#include "palmline/image.hpp"
#include "palmline/image_io.hpp"
#include "palmline/layers.hpp"
#include "palmline/model.hpp"
#include "palmline/preprocess.hpp"
#include "palmline/svm.hpp"
#include "palmline/sweep.hpp"
#include "palmline/synth.hpp"

namespace py = pybind11;
using namespace palmline;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
  Shape dims(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(dims), std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> to_array(const Tensor& t) {
  py::array_t<float> out(std::vector<py::ssize_t>(t.dims().begin(), t.dims().end()));
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

// HxWx3 array in [0, 255] to the planar layout.
ImageRgb to_image(const FloatArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("image must have shape (height, width, 3)");
  const auto h = static_cast<std::size_t>(a.shape(0)), w = static_cast<std::size_t>(a.shape(1));
  ImageRgb img(w, h);
  const float* p = a.data();
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = p[(y * w + x) * 3 + c];
  return img;
}

py::array_t<float> from_image(const ImageRgb& img) {
  py::array_t<float> out({img.height, img.width, std::size_t{3}});
  float* p = out.mutable_data();
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) p[(y * img.width + x) * 3 + c] = img.at(c, y, x);
  return out;
}

py::array_t<bool> from_mask(const BinaryMask& m) {
  py::array_t<bool> out({m.height, m.width});
  bool* p = out.mutable_data();
  for (std::size_t i = 0; i < m.bits.size(); ++i) p[i] = m.bits[i] != 0;
  return out;
}

LabeledFeatures to_labeled(const FloatArray& x, const py::array_t<std::int64_t, py::array::forcecast>& y) {
  if (x.ndim() != 2) throw py::value_error("features must be a 2-D array");
  if (y.ndim() != 1 || y.shape(0) != x.shape(0)) throw py::value_error("labels must be 1-D with one entry per row");
  LabeledFeatures d;
  d.dim = static_cast<std::size_t>(x.shape(1));
  d.vectors.assign(x.data(), x.data() + x.size());
  std::int64_t top = -1;
  for (py::ssize_t i = 0; i < y.shape(0); ++i) {
    const std::int64_t l = y.at(i);
    if (l < 0) throw py::value_error("labels must be non-negative");
    d.labels.push_back(static_cast<std::size_t>(l));
    top = std::max(top, l);
  }
  d.classes = static_cast<std::size_t>(top + 1);
  return d;
}

FeatureTable to_table(const FloatArray& x, const std::vector<std::string>& subjects, std::string model,
                      std::string layer) {
  if (x.ndim() != 2) throw py::value_error("features must be a 2-D array");
  if (subjects.size() != static_cast<std::size_t>(x.shape(0)))
    throw py::value_error("need one subject id per feature row");
  FeatureTable t;
  t.model_kind = std::move(model);
  t.layer = std::move(layer);
  t.dim = static_cast<std::size_t>(x.shape(1));
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const float* row = x.data() + i * t.dim;
    t.rows.push_back({subjects[i], subjects[i] + "_" + std::to_string(i), std::vector<float>(row, row + t.dim)});
  }
  return t;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Palmprint recognition from deep CNN features: weights, inference, ROI extraction and SVM sweeps.";

  py::register_exception<Error>(m, "PalmlineError", PyExc_RuntimeError);

  m.attr("FEATURE_DIM") = kFeatureDim;
  m.attr("DEFAULT_MEAN_RGB") = py::make_tuple(kDefaultMeanRgb[0], kDefaultMeanRgb[1], kDefaultMeanRgb[2]);

  m.def("input_side", [](const std::string& model) { return build_model(parse_model_kind(model)).input_side; },
        py::arg("model"));
  m.def(
      "parameter_specs",
      [](const std::string& model) {
        std::vector<std::pair<std::string, Shape>> out;
        for (auto& p : parameter_specs(build_model(parse_model_kind(model)))) out.emplace_back(p.name, p.dims);
        return out;
      },
      py::arg("model"), "Ordered (name, shape) pairs every weight container for `model` must provide.");
  m.def(
      "parameter_count", [](const std::string& model) { return parameter_count(build_model(parse_model_kind(model))); },
      py::arg("model"));

  py::class_<WeightStore>(m, "Weights", "Named float32 tensors backed by the PTWT container format.")
      .def(py::init<>())
      .def_static(
          "load", [](const std::filesystem::path& p) { return load_container(p); }, py::arg("path"),
          py::call_guard<py::gil_scoped_release>())
      .def_static(
          "from_bytes",
          [](const py::bytes& b) {
            const std::string_view s = b;
            return read_container(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
          },
          py::arg("data"))
      .def_static(
          "random", [](const std::string& model, std::uint64_t seed) {
            return random_weights(build_model(parse_model_kind(model)), seed);
          },
          py::arg("model"), py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>())
      .def(
          "save", [](const WeightStore& s, const std::filesystem::path& p) { save_container(s, p); }, py::arg("path"),
          py::call_guard<py::gil_scoped_release>())
      .def("to_bytes",
           [](const WeightStore& s) {
             const auto bytes = write_container(s);
             return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
           })
      .def(
          "insert", [](WeightStore& s, std::string name, const FloatArray& a) { s.insert(std::move(name), to_tensor(a)); },
          py::arg("name"), py::arg("array"))
      .def("names",
           [](const WeightStore& s) {
             std::vector<std::string> out;
             for (const auto& e : s) out.push_back(e.name);
             return out;
           })
      .def("validate", [](const WeightStore& s, const std::string& model) {
        validate_weights(build_model(parse_model_kind(model)), s);
      }, py::arg("model"))
      .def("__getitem__", [](const WeightStore& s, const std::string& name) { return to_array(s.at(name)); })
      .def("__contains__", [](const WeightStore& s, const std::string& name) { return s.contains(name); })
      .def("__len__", &WeightStore::size)
      .def("__eq__", [](const WeightStore& a, const WeightStore& b) { return a == b; });

  m.def(
      "conv2d",
      [](const FloatArray& x, const FloatArray& w, const FloatArray& b, std::size_t stride, std::size_t pad,
         std::size_t groups) { return to_array(conv2d(to_tensor(x), to_tensor(w), to_tensor(b), stride, pad, groups)); },
      py::arg("input"), py::arg("weight"), py::arg("bias"), py::arg("stride") = 1, py::arg("pad") = 0,
      py::arg("groups") = 1);
  m.def(
      "relu", [](const FloatArray& x) { return to_array(relu(to_tensor(x))); }, py::arg("input"));
  m.def(
      "maxpool2d", [](const FloatArray& x, std::size_t k, std::size_t s) { return to_array(maxpool2d(to_tensor(x), k, s)); },
      py::arg("input"), py::arg("kernel"), py::arg("stride"));
  m.def(
      "local_response_norm",
      [](const FloatArray& x, std::size_t n, float alpha, float beta, float k) {
        return to_array(local_response_norm(to_tensor(x), n, alpha, beta, k));
      },
      py::arg("input"), py::arg("n") = 5, py::arg("alpha") = 1e-4f, py::arg("beta") = 0.75f, py::arg("k") = 2.0f);
  m.def(
      "dense", [](const FloatArray& x, const FloatArray& w, const FloatArray& b) {
        return to_array(dense(to_tensor(x), to_tensor(w), to_tensor(b)));
      },
      py::arg("input"), py::arg("weight"), py::arg("bias"));

  m.def(
      "synth_hand",
      [](std::uint64_t seed, std::optional<double> angle_deg, std::size_t width, std::size_t height) {
        HandSynthOptions opts;
        opts.width = width;
        opts.height = height;
        if (angle_deg) opts.angle = *angle_deg * std::numbers::pi / 180.0;
        const SyntheticHand h = synthesize_hand_image(seed, opts);
        return py::make_tuple(from_image(h.image), from_mask(h.mask), h.angle);
      },
      py::arg("seed") = 0, py::arg("angle_deg") = py::none(), py::arg("width") = 320, py::arg("height") = 240,
      "Synthetic hand image (H, W, 3), its exact mask and major-axis angle in radians.");
  m.def(
      "segment",
      [](const FloatArray& image, std::uint64_t seed) { return from_mask(kmeans_segment(to_image(image), seed)); },
      py::arg("image"), py::arg("seed") = 0, "Two-cluster k-means hand mask.");
  m.def(
      "palm_roi",
      [](const FloatArray& image, const std::string& model, std::uint64_t seed, double downscale) {
        PreprocessConfig config;
        config.seed = seed;
        config.downscale_factor = downscale;
        config.validate();
        const ImageRgb img = to_image(image);
        PalmRoi r;
        {
          py::gil_scoped_release release;
          r = extract_palm_roi_detailed(img, build_model(parse_model_kind(model)).input_side, config);
        }
        py::dict out;
        out["roi"] = from_image(r.roi);
        out["mask"] = from_mask(r.normalized_mask);
        out["segmentation"] = from_mask(r.segmentation);
        out["angle"] = r.angle;
        out["square"] = py::make_tuple(r.square_full.x, r.square_full.y, r.square_full.side);
        return out;
      },
      py::arg("image"), py::arg("model") = "vgg16", py::arg("seed") = 0, py::arg("downscale") = 0.7,
      "Palm ROI resized to the model input, with the intermediate masks, angle and full-resolution square.");
  m.def(
      "read_image", [](const std::filesystem::path& p) { return from_image(read_image(p)); }, py::arg("path"),
      "Decodes a PNG or JPEG file to an (H, W, 3) float32 array in [0, 255].");
  m.def(
      "extract_features",
      [](const WeightStore& weights, const FloatArray& roi, const std::string& model, const std::string& layer,
         bool post_relu) {
        const ModelGraph graph = build_model(parse_model_kind(model));
        const ImageRgb img = to_image(roi);
        FeatureVector f;
        {
          py::gil_scoped_release release;
          const Tensor input = preprocess_input(img, graph, mean_rgb_from(weights));
          f = extract_features(graph, weights, input, parse_feature_layer(layer), post_relu);
        }
        py::array_t<float> out(static_cast<py::ssize_t>(f.values.size()));
        std::copy(f.values.begin(), f.values.end(), out.mutable_data());
        return out;
      },
      py::arg("weights"), py::arg("roi"), py::arg("model") = "vgg16", py::arg("layer") = "fc6",
      py::arg("post_relu") = true, "4096-d feature of an ROI image (H, W, 3) in [0, 255].");

  py::class_<SvmModel>(m, "LinearSvm", "One-vs-rest linear SVM trained with Pegasos SGD.")
      .def_static(
          "train",
          [](const FloatArray& x, const py::array_t<std::int64_t, py::array::forcecast>& y, double lambda,
             std::size_t epochs, std::uint64_t seed, bool normalize, unsigned threads) {
            const LabeledFeatures data = to_labeled(x, y);
            TrainConfig cfg;
            cfg.lambda = lambda;
            cfg.epochs = epochs;
            cfg.seed = seed;
            cfg.l2_normalize_features = normalize;
            cfg.threads = threads;
            py::gil_scoped_release release;
            return train_sgd(data, cfg);
          },
          py::arg("x"), py::arg("y"), py::arg("lam") = 1e-4, py::arg("epochs") = 20, py::arg("seed") = 0,
          py::arg("normalize") = true, py::arg("threads") = 1)
      .def_property_readonly("classes", &SvmModel::classes)
      .def_property_readonly("dim", &SvmModel::dim)
      .def_property_readonly("weights",
                             [](const SvmModel& s) {
                               py::array_t<float> out({s.classes(), s.dim() + 1});
                               std::copy(s.weights().begin(), s.weights().end(), out.mutable_data());
                               return out;
                             })
      .def(
          "predict",
          [](const SvmModel& s, const FloatArray& x) {
            if (x.ndim() != 2) throw py::value_error("x must be a 2-D array");
            const auto n = static_cast<std::size_t>(x.shape(0)), d = static_cast<std::size_t>(x.shape(1));
            const float* rows = x.data();
            std::vector<std::int64_t> labels(n);
            for (std::size_t i = 0; i < n; ++i)
              labels[i] = static_cast<std::int64_t>(s.predict(std::span<const float>(rows + i * d, d)));
            return py::array_t<std::int64_t>(static_cast<py::ssize_t>(n), labels.data());
          },
          py::arg("x"))
      .def(
          "objective",
          [](const SvmModel& s, const FloatArray& x, const py::array_t<std::int64_t, py::array::forcecast>& y) {
            return objective(s, to_labeled(x, y));
          },
          py::arg("x"), py::arg("y"))
      .def("to_weights", &SvmModel::to_store)
      .def_static("from_weights", &SvmModel::from_store, py::arg("weights"));

  m.def("train_count", &train_count, py::arg("class_size"), py::arg("ratio"));
  m.def(
      "run_sweep",
      [](const FloatArray& x, const std::vector<std::string>& subjects, std::vector<double> ratios, std::size_t repeats,
         std::uint64_t seed, double lambda, std::size_t epochs, const std::string& model, const std::string& layer,
         unsigned threads) {
        const FeatureTable table = to_table(x, subjects, model, layer);
        SweepConfig cfg;
        if (!ratios.empty()) cfg.ratios = std::move(ratios);
        cfg.repeats = repeats;
        cfg.base_seed = seed;
        cfg.train.lambda = lambda;
        cfg.train.epochs = epochs;
        cfg.threads = threads;
        SweepReport r;
        {
          py::gil_scoped_release release;
          r = run_sweep(table, cfg);
        }
        return emit_report_csv(r);
      },
      py::arg("x"), py::arg("subjects"), py::arg("ratios") = std::vector<double>{}, py::arg("repeats") = 10,
      py::arg("seed") = 0, py::arg("lam") = 1e-4, py::arg("epochs") = 20, py::arg("model") = "unknown",
      py::arg("layer") = "unknown", py::arg("threads") = 1, "Training-ratio sweep; returns the report CSV text.");
  m.def(
      "synth_features",
      [](std::size_t classes, std::size_t per_class, std::size_t dim, double sigma, std::uint64_t seed) {
        const FeatureTable t = synthesize_features(classes, per_class, dim, sigma, seed);
        py::array_t<float> x({t.rows.size(), t.dim});
        std::vector<std::string> subjects;
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
          std::copy(t.rows[i].feature.begin(), t.rows[i].feature.end(), x.mutable_data() + i * t.dim);
          subjects.push_back(t.rows[i].subject_id);
        }
        return py::make_tuple(x, subjects);
      },
      py::arg("classes"), py::arg("per_class"), py::arg("dim"), py::arg("sigma"), py::arg("seed") = 0,
      "Gaussian-blob features and their subject ids.");
}
