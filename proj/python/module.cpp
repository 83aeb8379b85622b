#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fstk/basis.hpp"
#include "fstk/error.hpp"
#include "fstk/ingest.hpp"
#include "fstk/model.hpp"
#include "fstk/parallel.hpp"
#include "fstk/randls.hpp"
#include "fstk/sthosvd.hpp"
#include "fstk/tensor.hpp"

namespace py = pybind11;

namespace {

using FArray = py::array_t<double, py::array::f_style | py::array::forcecast>;

fstk::DenseTensor tensor_from_array(const FArray& a) {
  std::vector<fstk::Index> shape(static_cast<std::size_t>(a.ndim()));
  for (py::ssize_t i = 0; i < a.ndim(); ++i)
    shape[static_cast<std::size_t>(i)] = a.shape(i);
  std::vector<double> data(a.data(), a.data() + a.size());
  return fstk::DenseTensor(std::move(shape), std::move(data));
}

py::array_t<double> tensor_to_array(const fstk::DenseTensor& t) {
  const std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double, py::array::f_style> out(shape);
  std::copy(t.vec().data(), t.vec().data() + t.size(), out.mutable_data());
  return out;
}

fstk::Matrix matrix_from_array(const FArray& a, const char* name) {
  if (a.ndim() != 2)
    throw py::value_error(std::string(name) + " must be a 2-D array");
  fstk::Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data());  // both column-major
  return m;
}

fstk::Vector vector_from_array(const FArray& a, const char* name) {
  if (a.ndim() != 1)
    throw py::value_error(std::string(name) + " must be a 1-D array");
  fstk::Vector v(a.shape(0));
  std::copy(a.data(), a.data() + a.size(), v.data());
  return v;
}

py::array_t<double> vector_to_array(const fstk::Vector& v) {
  py::array_t<double> out({static_cast<py::ssize_t>(v.size())});
  std::copy(v.data(), v.data() + v.size(), out.mutable_data());
  return out;
}

py::array_t<double> matrix_to_array(const fstk::Matrix& m) {
  py::array_t<double, py::array::f_style> out(
      {static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  std::copy(m.data(), m.data() + m.size(), out.mutable_data());
  return out;
}

fstk::PointCloud cloud_from_arrays(const FArray& points, const FArray& values) {
  return fstk::PointCloud::from_data(matrix_from_array(points, "points"),
                                     vector_from_array(values, "values"));
}

fstk::SynthKind parse_kind(const std::string& kind) {
  if (kind == "smooth") return fstk::SynthKind::Smooth;
  if (kind == "flame-front" || kind == "flame")
    return fstk::SynthKind::FlameFront;
  if (kind == "multiscale") return fstk::SynthKind::Multiscale;
  throw py::value_error("unknown synthetic field kind: " + kind);
}

fstk::SketchConfig sketch_from_kwargs(std::uint64_t seed,
                                      std::uint64_t sample_rows,
                                      std::uint64_t working_subset,
                                      const std::string& transform,
                                      double validation_fraction) {
  fstk::SketchConfig cfg;
  cfg.seed = seed;
  cfg.sample_rows = sample_rows;
  cfg.working_subset = working_subset;
  cfg.validation_fraction = validation_fraction;
  if (transform == "dct")
    cfg.transform = fstk::MixingTransform::Dct;
  else if (transform == "wht")
    cfg.transform = fstk::MixingTransform::Wht;
  else if (transform == "fft")
    cfg.transform = fstk::MixingTransform::Fft;
  else
    throw py::value_error("transform must be dct, wht, or fft");
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_fstk, m) {
  m.doc() =
      "Functional sparse Tucker compression: ST-HOSVD, sparse functional "
      "bases, randomized core re-estimation. Arrays use the mode-0-fastest "
      "(Fortran) layout.";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const fstk::Error& e) {
      switch (e.kind()) {
        case fstk::ErrorKind::Io:
        case fstk::ErrorKind::Decode:
          PyErr_SetString(PyExc_IOError, e.what());
          break;
        default:
          PyErr_SetString(PyExc_ValueError, e.what());
      }
    }
  });

  m.def("set_max_threads", &fstk::set_max_threads, py::arg("n"),
        "Cap worker threads (0 = hardware); results never depend on it.");


  py::class_<fstk::BasisSpec>(m, "BasisSpec")
      .def_static("legendre", &fstk::BasisSpec::legendre, py::arg("p"),
                  py::arg("lo") = -1.0, py::arg("hi") = 1.0)
      .def_static("wavelet", &fstk::BasisSpec::wavelet, py::arg("s"),
                  py::arg("p"), py::arg("lo") = -1.0, py::arg("hi") = 1.0)
      .def("dimension", &fstk::BasisSpec::dimension)
      .def("with_domain", &fstk::BasisSpec::with_domain, py::arg("lo"),
           py::arg("hi"))
      .def_readonly("degree", &fstk::BasisSpec::degree)
      .def_readonly("resolution", &fstk::BasisSpec::resolution)
      .def_readonly("lo", &fstk::BasisSpec::lo)
      .def_readonly("hi", &fstk::BasisSpec::hi)
      .def("__repr__", [](const fstk::BasisSpec& s) {
        const bool leg = s.family == fstk::BasisFamily::Legendre;
        return "BasisSpec(" +
               (leg ? "legendre, p=" + std::to_string(s.degree)
                    : "wavelet, s=" + std::to_string(s.resolution) +
                          ", p=" + std::to_string(s.degree)) +
               ")";
      });

  m.def(
      "eval_basis",
      [](const fstk::BasisSpec& spec, double x) {
        return vector_to_array(fstk::eval_basis(spec, x));
      },
      py::arg("spec"), py::arg("x"));

  py::class_<fstk::TuckerDecomposition>(m, "TuckerDecomposition")
      .def_property_readonly(
          "core",
          [](const fstk::TuckerDecomposition& d) {
            return tensor_to_array(d.core);
          })
      .def_property_readonly(
          "factors",
          [](const fstk::TuckerDecomposition& d) {
            std::vector<py::array_t<double>> out;
            out.reserve(d.factors.size());
            for (const auto& f : d.factors) out.push_back(matrix_to_array(f));
            return out;
          })
      .def_property_readonly(
          "ranks",
          [](const fstk::TuckerDecomposition& d) {
            const auto r = d.ranks();  // keep one copy alive across both ends
            return std::vector<std::int64_t>(r.begin(), r.end());
          })
      .def_readonly("achieved_error", &fstk::TuckerDecomposition::achieved_error);

  m.def(
      "sthosvd",
      [](const FArray& u, double epsilon) {
        return fstk::sthosvd(tensor_from_array(u), epsilon);
      },
      py::arg("u"), py::arg("epsilon"),
      "Sequentially truncated decomposition with a relative-error guarantee.");

  m.def(
      "reconstruct",
      [](const fstk::TuckerDecomposition& dec) {
        return tensor_to_array(fstk::reconstruct(dec));
      },
      py::arg("decomposition"));

  py::class_<fstk::FunctionalSparseTuckerModel>(m, "Model")
      .def_property_readonly("order", &fstk::FunctionalSparseTuckerModel::order)
      .def_property_readonly(
          "ranks",
          [](const fstk::FunctionalSparseTuckerModel& mdl) {
            const auto r = mdl.ranks();
            return std::vector<std::int64_t>(r.begin(), r.end());
          })
      .def_property_readonly(
          "core",
          [](const fstk::FunctionalSparseTuckerModel& mdl) {
            return tensor_to_array(mdl.core());
          })
      .def("domain", &fstk::FunctionalSparseTuckerModel::domain,
           py::arg("mode"))
      .def(
          "evaluate",
          [](const fstk::FunctionalSparseTuckerModel& mdl,
             const std::vector<double>& y) { return fstk::evaluate(mdl, y); },
          py::arg("y"))
      .def(
          "evaluate_batch",
          [](const fstk::FunctionalSparseTuckerModel& mdl,
             const FArray& points) {
            return vector_to_array(
                fstk::evaluate_batch(mdl, matrix_from_array(points, "points")));
          },
          py::arg("points"))
      .def(
          "storage",
          [](const fstk::FunctionalSparseTuckerModel& mdl) {
            const auto c = fstk::storage_cost(mdl);
            py::dict out;
            out["coefficients"] = c.coeff_count;
            out["value_bytes"] = c.value_bytes;
            out["index_bytes"] = c.index_bytes;
            out["total_bytes"] = c.total_bytes();
            return out;
          })
      .def("compression_ratio", &fstk::compression_ratio,
           py::arg("original_point_count"), py::arg("include_indices") = true)
      .def(
          "save",
          [](const fstk::FunctionalSparseTuckerModel& mdl,
             const std::string& path) { fstk::save_model(mdl, path); },
          py::arg("path"))
      .def_property_readonly(
          "flagged_fits",
          [](const fstk::FunctionalSparseTuckerModel& mdl) {
            return mdl.metadata().flagged_fits;
          });

  m.def(
      "load_model",
      [](const std::string& path) { return fstk::load_model(path); },
      py::arg("path"));

  m.def(
      "assemble",
      [](const fstk::TuckerDecomposition& dec,
         const std::vector<std::vector<double>>& grids,
         const std::vector<std::vector<fstk::BasisSpec>>& candidates,
         double residual_ceiling, double epsilon,
         const std::string& provenance) {
        fstk::AssembleOptions opts;
        opts.residual_ceiling = residual_ceiling;
        opts.epsilon = epsilon;
        opts.provenance = provenance;
        return fstk::assemble(dec, grids, candidates, opts);
      },
      py::arg("decomposition"), py::arg("grids"), py::arg("candidates"),
      py::arg("residual_ceiling") = 0.5, py::arg("epsilon") = 0.0,
      py::arg("provenance") = std::string(),
      "Fit every factor column with the candidate bases and package a model.");

  m.def(
      "reestimate_core",
      [](const fstk::FunctionalSparseTuckerModel& mdl, const FArray& points,
         const FArray& values, std::uint64_t seed, std::uint64_t sample_rows,
         std::uint64_t working_subset, const std::string& transform,
         double validation_fraction) {
        const auto res = fstk::reestimate_core(
            mdl, cloud_from_arrays(points, values),
            sketch_from_kwargs(seed, sample_rows, working_subset, transform,
                               validation_fraction));
        py::dict info;
        info["residual_before"] = res.residual_before;
        info["residual_after"] = res.residual_after;
        info["sample_rows"] = res.sample_rows;
        info["working_rows"] = res.working_rows;
        info["rank_deficient"] = res.rank_deficient;
        info["held_out"] = res.held_out;
        return py::make_tuple(res.model, info);
      },
      py::arg("model"), py::arg("points"), py::arg("values"),
      py::arg("seed") = 0, py::arg("sample_rows") = 0,
      py::arg("working_subset") = std::uint64_t(1) << 20,
      py::arg("transform") = "dct", py::arg("validation_fraction") = 0.05,
      "Sketched least-squares refresh of the core against scattered data.");

  m.def(
      "interpolate_to_grid",
      [](const FArray& points, const FArray& values,
         const std::vector<fstk::Index>& sizes, const std::vector<double>& lo,
         const std::vector<double>& hi) {
        const auto cloud = cloud_from_arrays(points, values);
        fstk::StructuredGrid grid;
        grid.sizes = sizes;
        if (lo.empty() && hi.empty()) {
          for (int k = 0; k < cloud.dim(); ++k)
            grid.intervals.emplace_back(cloud.box_lo[k], cloud.box_hi[k]);
        } else {
          if (lo.size() != hi.size() || lo.size() != sizes.size())
            throw py::value_error("lo/hi must have one entry per mode");
          for (std::size_t k = 0; k < lo.size(); ++k)
            grid.intervals.emplace_back(lo[k], hi[k]);
        }
        return tensor_to_array(fstk::interpolate_to_grid(cloud, grid));
      },
      py::arg("points"), py::arg("values"), py::arg("sizes"),
      py::arg("lo") = std::vector<double>(),
      py::arg("hi") = std::vector<double>(),
      "Nearest-neighbor inverse-distance transfer onto an equispaced grid.");

  m.def(
      "synth_field_grid",
      [](const std::string& kind, const std::vector<fstk::Index>& sizes,
         std::uint64_t seed, int terms, double amplitude, double thickness,
         int harmonics, double perturbation) {
        fstk::SynthParams p;
        p.terms = terms;
        p.amplitude = amplitude;
        p.thickness = thickness;
        p.harmonics = harmonics;
        p.perturbation = perturbation;
        return tensor_to_array(fstk::synth_field_grid(
            parse_kind(kind), fstk::StructuredGrid::unit(sizes), p, seed));
      },
      py::arg("kind"), py::arg("sizes"), py::arg("seed") = 0,
      py::arg("terms") = 3, py::arg("amplitude") = 1.0,
      py::arg("thickness") = 0.05, py::arg("harmonics") = 3,
      py::arg("perturbation") = 0.08);

  m.def(
      "synth_field_cloud",
      [](const std::string& kind, int dim, fstk::Index count,
         std::uint64_t seed, int terms, double amplitude, double thickness,
         int harmonics, double perturbation) {
        fstk::SynthParams p;
        p.terms = terms;
        p.amplitude = amplitude;
        p.thickness = thickness;
        p.harmonics = harmonics;
        p.perturbation = perturbation;
        const auto pc =
            fstk::synth_field_cloud(parse_kind(kind), dim, count, p, seed);
        return py::make_tuple(matrix_to_array(pc.points),
                              vector_to_array(pc.values));
      },
      py::arg("kind"), py::arg("dim"), py::arg("count"), py::arg("seed") = 0,
      py::arg("terms") = 3, py::arg("amplitude") = 1.0,
      py::arg("thickness") = 0.05, py::arg("harmonics") = 3,
      py::arg("perturbation") = 0.08);
}
