// Python bindings for the core operations: hyperparameter sampling,
// transforms, channel plans, the cost model, descriptor tools, and the
// Model / SeedPack round trip.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "sinefm/codec.hpp"
#include "sinefm/cost.hpp"
#include "sinefm/gradcheck.hpp"
#include "sinefm/layer.hpp"
#include "sinefm/network.hpp"
#include "sinefm/trainer.hpp"

namespace py = pybind11;
using namespace sinefm;

namespace {

TransformFamily family_arg(const std::string& name) {
    const auto family = family_from_name(name);
    if (!family) {
        throw py::value_error("unknown transform family '" + name + "'");
    }
    return *family;
}

TensorPtr<float> tensor_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 4) {
        throw py::value_error("expected a rank-4 array [N, C, H, W]");
    }
    Shape shape{static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
                static_cast<int>(arr.shape(2)), static_cast<int>(arr.shape(3))};
    auto t = make_tensor<float>(shape);
    std::memcpy(t->data.data(), arr.data(), sizeof(float) * t->data.size());
    return t;
}

py::array_t<float> array_from_tensor(const Tensor<float>& t) {
    py::array_t<float> arr({t.shape.n, t.shape.c, t.shape.h, t.shape.w});
    std::memcpy(arr.mutable_data(), t.data.data(), sizeof(float) * t.data.size());
    return arr;
}

py::dict params_dict(const TransformSpec& spec, int channel) {
    const ChannelParams& p = spec.params[channel];
    py::dict d;
    switch (spec.family) {
    case TransformFamily::Monomial:
        d["beta"] = p.beta;
        break;
    case TransformFamily::ChebyshevPoly:
    case TransformFamily::HermitePoly:
    case TransformFamily::LegendrePoly:
        d["degree"] = p.degree;
        break;
    case TransformFamily::GaussianRBF:
    case TransformFamily::MultiquadraticRBF:
    case TransformFamily::InverseQuadraticRBF:
    case TransformFamily::InverseMultiquadraticRBF:
        d["eps"] = p.eps;
        break;
    case TransformFamily::Sinusoidal:
        d["omega"] = p.omega;
        d["psi"] = p.psi;
        break;
    }
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "SineFM core: seed-feature-map CNN layers, seeded transforms, "
              "cost model, and the SeedPack codec";

    py::register_exception<Error>(m, "SineFMError", PyExc_RuntimeError);

    py::class_<TransformSpec>(m, "TransformSpec")
        .def_property_readonly("family",
                               [](const TransformSpec& s) { return family_name(s.family); })
        .def_property_readonly("seed", [](const TransformSpec& s) { return s.seed; })
        .def_property_readonly("count",
                               [](const TransformSpec& s) { return s.params.size(); })
        .def("params",
             [](const TransformSpec& s) {
                 py::list out;
                 for (std::size_t i = 0; i < s.params.size(); ++i) {
                     out.append(params_dict(s, static_cast<int>(i)));
                 }
                 return out;
             })
        .def("eval",
             [](const TransformSpec& s, int channel, py::array_t<double> x) {
                 auto buf = x.request();
                 py::array_t<double> out(buf.shape);
                 const double* src = static_cast<const double*>(buf.ptr);
                 double* dst = static_cast<double*>(out.request().ptr);
                 for (py::ssize_t i = 0; i < buf.size; ++i) {
                     dst[i] = transform_value(s, channel, src[i]);
                 }
                 return out;
             },
             py::arg("channel"), py::arg("x"),
             "Apply one channel's transform elementwise.")
        .def("__eq__", [](const TransformSpec& a, const TransformSpec& b) { return a == b; });

    m.def(
        "sample_hyperparams",
        [](std::uint64_t seed, const std::string& family, int count) {
            return sample_hyperparams(seed, family_arg(family), count);
        },
        py::arg("seed"), py::arg("family"), py::arg("count"),
        "Deterministic seeded draw of per-channel transform hyperparameters.");

    m.def(
        "eval_polynomial_recurrence",
        [](const std::string& family, int n, double x) {
            return eval_polynomial_recurrence(family_arg(family), n, x);
        },
        py::arg("family"), py::arg("n"), py::arg("x"));

    m.def(
        "channel_plan",
        [](int c_out, int c_s, int k) {
            const ChannelPlan plan = channel_plan(c_out, c_s, k);
            py::dict d;
            d["c_g"] = plan.c_g;
            d["combine_in"] = plan.combine_in;
            d["combine_out"] = plan.combine_out;
            return d;
        },
        py::arg("c_out"), py::arg("c_s"), py::arg("k"));

    m.def("conv_flops", &conv_flops, py::arg("c_in"), py::arg("k"), py::arg("h_out"),
          py::arg("w_out"), py::arg("c_out"));

    m.def(
        "sinefm_flops",
        [](int c_in, int c_out, int c_s, int kernel, int fanout, int h_out, int w_out) {
            SineFMConfig cfg;
            cfg.c_in = c_in;
            cfg.c_out = c_out;
            cfg.c_s = c_s;
            cfg.kernel = kernel;
            cfg.fanout = fanout;
            return sinefm_flops(cfg, h_out, w_out);
        },
        py::arg("c_in"), py::arg("c_out"), py::arg("c_s"), py::arg("kernel"), py::arg("fanout"),
        py::arg("h_out"), py::arg("w_out"));

    m.def(
        "model_cost",
        [](const std::string& descriptor, int h, int w) {
            const CostReport report = model_cost(parse_descriptor(descriptor), h, w);
            py::list rows;
            for (const auto& row : report.rows) {
                py::dict d;
                d["layer"] = row.layer;
                d["params"] = row.params;
                d["flops"] = row.flops;
                rows.append(d);
            }
            py::dict out;
            out["rows"] = rows;
            out["total_params"] = report.total_params;
            out["total_flops"] = report.total_flops;
            return out;
        },
        py::arg("descriptor"), py::arg("h"), py::arg("w"));

    m.def(
        "builtin_arch",
        [](const std::string& name, int h, int w, int classes) {
            const auto desc = builtin_arch(name, h, w, classes);
            if (!desc) throw py::value_error("unknown builtin architecture '" + name + "'");
            return format_descriptor(*desc);
        },
        py::arg("name"), py::arg("h") = 0, py::arg("w") = 0, py::arg("classes") = 0);

    m.def(
        "convert_to_sinefm",
        [](const std::string& descriptor, int c_s, int k, const std::string& family,
           std::uint64_t seed) {
            return format_descriptor(
                convert_to_sinefm(parse_descriptor(descriptor), c_s, k, family_arg(family), seed));
        },
        py::arg("descriptor"), py::arg("c_s") = 16, py::arg("k") = 5,
        py::arg("family") = "sinusoidal", py::arg("seed") = 0);

    m.def(
        "standardize",
        [](const std::string& descriptor) {
            return format_descriptor(standardize(parse_descriptor(descriptor)));
        },
        py::arg("descriptor"));

    m.def(
        "size_report",
        [](const std::string& descriptor) {
            const SizeReport report = size_report(parse_descriptor(descriptor));
            py::dict d;
            d["sinefm_bytes"] = report.sinefm_bytes;
            d["full_conv_bytes"] = report.full_conv_bytes;
            d["ratio"] = report.ratio;
            return d;
        },
        py::arg("descriptor"));

    m.def(
        "normalize_maps",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> x, double eps) {
            return array_from_tensor(*normalize_maps<float>(nullptr, tensor_from_array(x), eps));
        },
        py::arg("x"), py::arg("eps") = 1e-5,
        "Per-map zero mean and centered-L2 normalization of [N, C, H, W].");

    m.def(
        "grad_check_layer",
        [](const std::string& family, std::uint64_t seed) {
            return grad_check_layer(family_arg(family), seed);
        },
        py::arg("family"), py::arg("seed") = 7,
        "Max relative error of the layer's analytic gradient vs central differences.");

    m.def(
        "fit_alpha",
        [](const TransformSpec& spec,
           py::array_t<double, py::array::c_style | py::array::forcecast> seed_filter,
           py::array_t<double, py::array::c_style | py::array::forcecast> target_filter,
           py::array_t<double, py::array::c_style | py::array::forcecast> patches) {
            if (patches.ndim() != 2) throw py::value_error("patches must be [P, len]");
            const int plen = static_cast<int>(patches.shape(1));
            if (seed_filter.size() != plen || target_filter.size() != plen) {
                throw py::value_error("filters must match patch length");
            }
            Tensor<double> seed(Shape{1, plen, 1, 1});
            Tensor<double> target(Shape{1, plen, 1, 1});
            std::memcpy(seed.data.data(), seed_filter.data(), sizeof(double) * plen);
            std::memcpy(target.data.data(), target_filter.data(), sizeof(double) * plen);
            Tensor<double> pt(Shape{static_cast<int>(patches.shape(0)), plen, 1, 1});
            std::memcpy(pt.data.data(), patches.data(), sizeof(double) * pt.data.size());
            const AlphaFit fit = fit_alpha(seed, spec, target, pt);
            return py::make_tuple(fit.alpha, fit.residual, fit.degenerate);
        },
        py::arg("spec"), py::arg("seed_filter"), py::arg("target_filter"), py::arg("patches"),
        "Least-squares 1x1 combination fit; returns (alpha, rms_residual, degenerate).");

    py::class_<Model<float>>(m, "Model")
        .def_static(
            "build",
            [](const std::string& descriptor, std::uint64_t seed) {
                return build<float>(parse_descriptor(descriptor), seed);
            },
            py::arg("descriptor"), py::arg("seed"))
        .def_static(
            "unpack",
            [](py::bytes data) {
                const std::string s = data;
                std::vector<std::uint8_t> bytes(s.begin(), s.end());
                return unpack<float>(bytes);
            },
            py::arg("data"))
        .def_static("load", &load_pack<float>, py::arg("path"))
        .def(
            "predict",
            [](const Model<float>& model,
               py::array_t<float, py::array::c_style | py::array::forcecast> x) {
                return array_from_tensor(*predict(model, tensor_from_array(x)));
            },
            py::arg("x"))
        .def("pack",
             [](const Model<float>& model) {
                 const auto bytes = pack(model);
                 return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
             })
        .def("save", &save_pack<float>, py::arg("path"))
        .def_property_readonly("descriptor",
                               [](const Model<float>& model) {
                                   return format_descriptor(model.descriptor);
                               })
        .def_property_readonly("parameter_count", &Model<float>::parameter_count);

    m.attr("families") = []() {
        py::list out;
        for (const TransformFamily family : all_families()) {
            out.append(family_name(family));
        }
        return out;
    }();

    m.attr("__version__") = "0.1.0";
}
