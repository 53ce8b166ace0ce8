#include <cstring>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <becv/error.hpp>
#include <becv/pipeline.hpp>

namespace py = pybind11;
using namespace becv;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

// (N, 3, H, W) float array -> frames.
std::vector<Tensor> to_frames(const FloatArray& a) {
  if (a.ndim() != 4 || a.shape(1) != 3) throw py::value_error("frames must have shape (N, 3, H, W)");
  const int n = static_cast<int>(a.shape(0)), h = static_cast<int>(a.shape(2)), w = static_cast<int>(a.shape(3));
  std::vector<Tensor> frames;
  const float* src = a.data();
  for (int t = 0; t < n; ++t) {
    Tensor f(3, h, w);
    std::memcpy(f.data().data(), src + static_cast<std::size_t>(t) * f.size(), f.size() * sizeof(float));
    frames.push_back(std::move(f));
  }
  return frames;
}

FloatArray from_frames(const std::vector<Tensor>& frames) {
  if (frames.empty()) return FloatArray(std::vector<py::ssize_t>{0, 3, 0, 0});
  const Tensor& f0 = frames.front();
  FloatArray out({static_cast<py::ssize_t>(frames.size()), py::ssize_t{3}, static_cast<py::ssize_t>(f0.height()),
                  static_cast<py::ssize_t>(f0.width())});
  float* dst = out.mutable_data();
  for (const Tensor& f : frames) {
    std::memcpy(dst, f.data().data(), f.size() * sizeof(float));
    dst += f.size();
  }
  return out;
}

py::dict report_dict(const FrameReport& r) {
  py::dict d;
  d["t"] = r.t;
  d["kind"] = r.kind == FrameKind::intra ? "I" : "B";
  d["layer"] = r.layer;
  d["bits_motion"] = r.bits_motion;
  d["bits_latent"] = r.bits_latent;
  d["psnr"] = r.psnr;
  d["step"] = r.step;
  return d;
}

}  // namespace

PYBIND11_MODULE(_becv, m) {
  m.doc() = "Bidirectional learned video codec";

  // Later registrations are tried first, so the subclass goes last.
  auto codec_error = py::register_exception<Error>(m, "CodecError", PyExc_RuntimeError);
  py::register_exception<DecodeError>(m, "DecodeError", codec_error.ptr());

  py::class_<ParameterSet>(m, "Profile")
      .def_static("identity", [] { return make_identity_profile(); })
      .def_static("seeded", [](std::uint64_t seed) { return make_seeded_profile(seed); }, py::arg("seed"))
      .def_static("load", [](const std::string& path) { return load_parameters(path); }, py::arg("path"))
      .def("save", [](const ParameterSet& p, const std::string& path) { save_parameters(p, path); }, py::arg("path"))
      .def_property_readonly("profile_id", &ParameterSet::profile_id)
      .def_property_readonly("seed", [](const ParameterSet& p) { return p.seed; });

  m.def("format_plan", [](int ip, int n) { return format_plan(build_plan(ip, n)); }, py::arg("intra_period"),
        py::arg("frame_count"));
  m.def(
      "plan",
      [](int ip, int n) {
        const GopPlan plan = build_plan(ip, n);
        py::list out;
        for (int t : plan.coding_order) {
          py::dict d;
          d["t"] = t;
          d["layer"] = plan[t].layer;
          py::list refs;
          for (const Reference& r : plan[t].references()) refs.append(r.time);
          d["refs"] = refs;
          d["proxy"] = plan[t].fwd_is_proxy;
          out.append(d);
        }
        return out;
      },
      py::arg("intra_period"), py::arg("frame_count"), "Frames in coding order with their references.");

  m.def(
      "encode",
      [](const FloatArray& frames, const ParameterSet& p, int ip, int qp, bool use_cache) {
        SequenceJob job{to_frames(frames), ip, qp, use_cache};
        EncodeResult r;
        {
          py::gil_scoped_release release;
          r = encode_sequence(job, p);
        }
        py::list reports;
        for (const auto& rep : r.reports) reports.append(report_dict(rep));
        return py::make_tuple(py::bytes(reinterpret_cast<const char*>(r.bitstream.data()), r.bitstream.size()),
                              from_frames(r.reconstructions), reports);
      },
      py::arg("frames"), py::arg("profile"), py::arg("intra_period") = 8, py::arg("qp") = 0,
      py::arg("use_cache") = true, "Returns (bitstream, reconstructions, per-frame reports in coding order).");

  m.def(
      "decode",
      [](const py::bytes& data, const ParameterSet& p, bool use_cache) {
        const std::string s = data;
        const std::vector<std::uint8_t> bytes(s.begin(), s.end());
        DecodeResult r;
        {
          py::gil_scoped_release release;
          r = decode_sequence(bytes, p, use_cache);
        }
        return from_frames(r.frames);
      },
      py::arg("bitstream"), py::arg("profile"), py::arg("use_cache") = true);

  m.def(
      "psnr",
      [](const FloatArray& a, const FloatArray& b) {
        if (a.ndim() != 3 || b.ndim() != 3) throw py::value_error("psnr expects two (3, H, W) frames");
        const auto one = [](const FloatArray& x) {
          Tensor t(static_cast<int>(x.shape(0)), static_cast<int>(x.shape(1)), static_cast<int>(x.shape(2)));
          std::memcpy(t.data().data(), x.data(), t.size() * sizeof(float));
          return t;
        };
        return psnr(one(a), one(b));
      },
      py::arg("a"), py::arg("b"), "PSNR of two (3, H, W) frames in [0, 1].");
}
