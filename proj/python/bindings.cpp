// Copyright 2026 The synthvae Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python extension `synthvae._core`. Arrays cross the boundary as numpy;
// JSON documents (schemas, checkpoint metadata, reports) as Python objects.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "synthvae/cli/cli.hpp"
#include "synthvae/dataset.hpp"
#include "synthvae/errors.hpp"
#include "synthvae/losses.hpp"
#include "synthvae/metrics.hpp"
#include "synthvae/nn/model.hpp"
#include "synthvae/render.hpp"
#include "synthvae/schema.hpp"

namespace py = pybind11;
using namespace synthvae;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::object to_py(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

std::vector<double> to_vector(const DoubleArray& a) {
  if (a.ndim() != 1) throw ShapeError("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

DomainSpec domain_by_name(const std::string& name, const AttributeSchema& schema) {
  if (name == "synth") return {};
  if (name == "toy-real") return DomainSpec::toy_real(schema);
  throw ConfigError("domain", "unknown domain '" + name + "' (synth | toy-real)");
}

FloatArray image_array(const Image& img) {
  FloatArray out({img.dims.height, img.dims.width, img.dims.channels});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

FloatArray batch_array(const std::vector<Image>& images) {
  if (images.empty()) return FloatArray(std::vector<py::ssize_t>{0, 0, 0, 0});
  const ImageDims d = images.front().dims;
  FloatArray out({static_cast<py::ssize_t>(images.size()), static_cast<py::ssize_t>(d.height),
                  static_cast<py::ssize_t>(d.width), static_cast<py::ssize_t>(d.channels)});
  float* dst = out.mutable_data();
  for (const auto& img : images) dst = std::copy(img.pixels.begin(), img.pixels.end(), dst);
  return out;
}

Image image_from(const FloatArray& a) {
  if (a.ndim() != 3) throw ShapeError("expected an HxWxC image array");
  Image img(ImageDims{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2))});
  std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
  return img;
}

// Accepts HxWxC (one image) or NxHxWxC.
std::vector<Image> images_from(const FloatArray& a) {
  if (a.ndim() == 3) return {image_from(a)};
  if (a.ndim() != 4) throw ShapeError("expected an NxHxWxC image batch");
  const ImageDims d{static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)), static_cast<int>(a.shape(3))};
  std::vector<Image> out;
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    Image img(d);
    std::copy(a.data() + i * d.count(), a.data() + (i + 1) * d.count(), img.pixels.begin());
    out.push_back(std::move(img));
  }
  return out;
}

py::dict delta_dict(const DeltaResult& d) {
  py::dict out;
  out["delta"] = d.delta;
  out["delta_prime"] = d.delta_prime;
  out["excluded"] = d.excluded;
  out["pairs"] = d.pairs;
  out["contrast_ratio"] = contrast_ratio(d);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Synthetic-supervised VAE-GAN: renderer, losses, metrics, models and pipeline";

  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<RangeError>(m, "RangeError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.attr("renderer_version") = std::string(kRendererVersion);

  m.def("schema", [](const std::string& name) { return to_py(resolve_schema(name).to_json()); },
        py::arg("name") = "default", "Attribute schema by name (default, toy) or JSON path.");

  m.def(
      "sample_attributes",
      [](const std::string& schema, std::size_t count, std::uint64_t seed, const std::string& domain) {
        const auto s = resolve_schema(schema);
        const auto rows = sample_domain(s, domain_by_name(domain, s), count, seed);
        DoubleArray out({static_cast<py::ssize_t>(count), static_cast<py::ssize_t>(s.size())});
        double* dst = out.mutable_data();
        for (const auto& r : rows) dst = std::copy(r.begin(), r.end(), dst);
        return out;
      },
      py::arg("schema"), py::arg("count"), py::arg("seed"), py::arg("domain") = "synth",
      "Attribute vectors (attribute units), one row per sample.");

  m.def(
      "to_code",
      [](const DoubleArray& values, const std::string& schema) {
        return to_code(to_vector(values), resolve_schema(schema));
      },
      py::arg("values"), py::arg("schema"));

  m.def(
      "render",
      [](const DoubleArray& values, const std::string& schema, const std::string& dims, const std::string& domain) {
        const auto s = resolve_schema(schema);
        return image_array(render_in_domain(to_vector(values), s, ImageDims::parse(dims), domain_by_name(domain, s)));
      },
      py::arg("values"), py::arg("schema"), py::arg("dims") = "80x64x3", py::arg("domain") = "synth",
      "Renders one attribute vector to an HxWxC float image in [-1, 1].");

  m.def("recon_loss",
        [](const DoubleArray& x, const DoubleArray& r, double alpha) { return recon_loss(to_vector(x), to_vector(r), alpha); },
        py::arg("x"), py::arg("r"), py::arg("alpha") = 1.0);
  m.def("latent_loss",
        [](const DoubleArray& mean, const DoubleArray& sigma, double beta) {
          return latent_loss(to_vector(mean), to_vector(sigma), beta);
        },
        py::arg("mean"), py::arg("sigma"), py::arg("beta") = 8.0);
  m.def("generator_loss", &generator_loss, py::arg("p_real_of_r"), py::arg("gamma") = 0.03,
        py::arg("epsilon") = 1e-8);
  m.def("discriminator_loss", &discriminator_loss, py::arg("p_real_of_r"), py::arg("p_real_of_x"),
        py::arg("epsilon") = 1e-8);

  m.def(
      "code_std",
      [](const CodeMatrix& codes, std::size_t min_count) { return code_stats(codes, min_count).sigma; },
      py::arg("codes"), py::arg("min_count") = 100);
  m.def(
      "pair_delta",
      [](const CodeMatrix& positive, const CodeMatrix& negative, const DoubleArray& sigma) {
        CodeStats stats;
        stats.sigma = to_vector(sigma);
        stats.count = static_cast<std::size_t>(positive.rows());
        return delta_dict(pair_delta(positive, negative, stats));
      },
      py::arg("positive"), py::arg("negative"), py::arg("sigma"));
  m.def(
      "sequence_correlation",
      [](const CodeMatrix& trajectories, std::size_t top_k) {
        return to_py(sequence_correlation(trajectories, top_k).to_json());
      },
      py::arg("trajectories"), py::arg("top_k") = 7);

  py::class_<nn::Model, std::shared_ptr<nn::Model>>(m, "Model")
      .def(py::init([](const std::string& path) { return std::make_shared<nn::Model>(nn::Model::load(path)); }),
           py::arg("path"))
      .def_property_readonly("meta", [](const nn::Model& model) { return to_py(model.meta().to_json()); })
      .def_property_readonly("can_decode", &nn::Model::can_decode)
      .def_property_readonly("code_length", [](const nn::Model& model) { return model.meta().code_length(); })
      .def(
          "encode",
          [](const nn::Model& model, const FloatArray& images) {
            const auto batch = images_from(images);
            nn::Model::Encoding e;
            {
              py::gil_scoped_release release;
              e = model.encode(batch);
            }
            py::dict out;
            out["z_da"] = e.z_da;
            out["z_r_mean"] = e.z_r_mean;
            out["code"] = e.code;
            return out;
          },
          py::arg("images"), "Mean codes for an HxWxC image or NxHxWxC batch.")
      .def(
          "decode",
          [](const nn::Model& model, const CodeMatrix& codes) {
            std::vector<Image> images;
            {
              py::gil_scoped_release release;
              images = model.decode(codes);
            }
            return batch_array(images);
          },
          py::arg("codes"))
      .def(
          "transform",
          [](const nn::Model& model, const FloatArray& image, const std::map<std::size_t, double>& edits) {
            const Image x = image_from(image);
            TransformResult t;
            {
              py::gil_scoped_release release;
              t = transform(model.code_encoder(), model.decoder(), x, edits);
            }
            return py::make_tuple(t.code, image_array(t.image));
          },
          py::arg("image"), py::arg("edits"), "Encode, overwrite code components, decode.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          std::vector<std::string> argv{"synthvae"};
          argv.insert(argv.end(), args.begin(), args.end());
          code = cli::run(argv, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a pipeline subcommand; returns (exit code, stdout, stderr).");
}
