#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "freqsift/cli.hpp"
#include "freqsift/composition.hpp"
#include "freqsift/error.hpp"
#include "freqsift/metrics.hpp"
#include "freqsift/registry.hpp"
#include "freqsift/search.hpp"
#include "freqsift/transfer.hpp"
#include "freqsift/wav.hpp"

namespace py = pybind11;
using namespace freqsift;
using nlohmann::json;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

struct PyClassifier {
  ClassifierPtr ptr;
};

Signal to_signal(const Array& a, int rate) {
  if (a.ndim() != 1) throw Error(ErrorKind::InvalidInput, "samples must be one-dimensional");
  return Signal(std::vector<double>(a.data(), a.data() + a.size()), rate);
}

Array to_array(std::span<const double> v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

SearchOptions search_options(double delta, std::size_t granularity, std::optional<double> floor, std::size_t n_fft,
                             bool strict_complete) {
  SearchOptions o;
  o.delta = delta;
  o.granularity = granularity;
  o.confidence_floor = floor;
  o.analysis.n_fft = n_fft;
  o.allow_full_complete = !strict_complete;
  return o;
}

PsdConfig psd_config(const std::string& window, std::size_t welch_nperseg, std::size_t welch_overlap) {
  if (window != "rect" && window != "hann") throw Error(ErrorKind::InvalidParameter, "window must be rect or hann");
  const Window w = window == "hann" ? Window::Hann : Window::Rect;
  if (welch_nperseg > 0) return PsdConfig::welch(welch_nperseg, welch_overlap, w);
  return {PsdMethod::Periodogram, w};
}

TokenLevel token_level(const std::string& level) {
  if (level != "char" && level != "word") throw Error(ErrorKind::InvalidParameter, "level must be char or word");
  return level == "word" ? TokenLevel::Word : TokenLevel::Character;
}

std::vector<NamedSignal> named(const std::vector<std::string>& ids, const std::vector<Array>& signals, int rate) {
  if (ids.size() != signals.size()) throw Error(ErrorKind::InvalidParameter, "ids and signals differ in length");
  std::vector<NamedSignal> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.push_back({ids[i], to_signal(signals[i], rate)});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "freqsift native core";
  m.attr("__version__") = std::string(cli::tool_version());

  static PyObject* error_type = PyErr_NewException("freqsift._core.Error", PyExc_RuntimeError, nullptr);
  m.attr("Error") = py::handle(error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::handle(error_type)(e.what());
      inst.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error_type, inst.ptr());
    }
  });

  py::class_<PyClassifier>(m, "Classifier")
      .def_property_readonly("id", [](const PyClassifier& c) { return c.ptr->id(); })
      .def_property_readonly("labels", [](const PyClassifier& c) { return c.ptr->labels(); })
      .def_property_readonly("sample_rate", [](const PyClassifier& c) { return c.ptr->sample_rate(); })
      .def_property_readonly("backend", [](const PyClassifier& c) { return c.ptr->backend(); })
      .def(
          "classify",
          [](const PyClassifier& c, const Array& samples, int rate) {
            const auto d = classify(*c.ptr, to_signal(samples, rate));
            return std::vector<double>(d.probs().begin(), d.probs().end());
          },
          py::arg("samples"), py::arg("sample_rate"))
      .def("__repr__", [](const PyClassifier& c) { return "<Classifier " + c.ptr->id() + ">"; });

  m.def(
      "make_classifier",
      [](const std::string& entry, int default_rate) { return PyClassifier{make_classifier(json::parse(entry), default_rate)}; },
      py::arg("entry_json"), py::arg("default_sample_rate") = 16000);
  m.def(
      "parse_oracle_spec", [](const std::string& spec, int default_rate) { return PyClassifier{parse_oracle_spec(spec, default_rate)}; },
      py::arg("spec"), py::arg("default_sample_rate") = 16000);

  m.def(
      "find_sufficient",
      [](const PyClassifier& c, const Array& samples, int rate, double delta, std::size_t granularity,
         std::optional<double> floor, std::size_t n_fft) {
        const auto r = find_sufficient(*c.ptr, to_signal(samples, rate), search_options(delta, granularity, floor, n_fft, false));
        return to_json(r, *c.ptr).dump();
      },
      py::arg("classifier"), py::arg("samples"), py::arg("sample_rate"), py::arg("delta") = 0.5,
      py::arg("granularity") = 0, py::arg("confidence_floor") = py::none(), py::arg("n_fft") = 0);
  m.def(
      "find_complete",
      [](const PyClassifier& c, const Array& samples, int rate, double delta, std::size_t granularity,
         std::optional<double> floor, std::size_t n_fft, bool strict) {
        const auto r = find_complete(*c.ptr, to_signal(samples, rate), search_options(delta, granularity, floor, n_fft, strict));
        return to_json(r, *c.ptr).dump();
      },
      py::arg("classifier"), py::arg("samples"), py::arg("sample_rate"), py::arg("delta") = 0.5,
      py::arg("granularity") = 0, py::arg("confidence_floor") = py::none(), py::arg("n_fft") = 0,
      py::arg("strict_complete") = false);
  m.def(
      "verify_sufficient",
      [](const PyClassifier& c, const Array& samples, int rate, const std::string& mask, double delta, double floor,
         std::size_t n_fft) {
        AnalysisConfig a;
        a.n_fft = n_fft;
        const auto r = verify_sufficient(*c.ptr, to_signal(samples, rate), mask_from_json(json::parse(mask)), delta, a, floor);
        return py::make_tuple(r.sufficient, r.target_class,
                              std::vector<double>(r.distribution.probs().begin(), r.distribution.probs().end()));
      },
      py::arg("classifier"), py::arg("samples"), py::arg("sample_rate"), py::arg("mask_json"), py::arg("delta") = 0.5,
      py::arg("confidence_floor") = 0.0, py::arg("n_fft") = 0);
  m.def(
      "reconstruct",
      [](const Array& samples, int rate, const std::string& mask, std::size_t n_fft) {
        AnalysisConfig a;
        a.n_fft = n_fft;
        return to_array(reconstruct(to_signal(samples, rate), mask_from_json(json::parse(mask)), a).samples());
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("mask_json"), py::arg("n_fft") = 0);

  m.def(
      "transfer_matrix",
      [](const std::vector<PyClassifier>& models, const std::vector<std::string>& ids, const std::vector<Array>& signals,
         int rate, const std::string& kind, double epsilon, double delta, std::size_t granularity, std::size_t workers) {
        if (kind != "sufficient" && kind != "complete") throw Error(ErrorKind::InvalidParameter, "kind must be sufficient or complete");
        std::vector<ClassifierPtr> ptrs;
        for (const auto& c : models) ptrs.push_back(c.ptr);
        MatrixOptions mo;
        mo.kind = kind == "complete" ? SubsetKind::Complete : SubsetKind::Sufficient;
        mo.epsilon = epsilon;
        mo.search = search_options(delta, granularity, std::nullopt, 0, false);
        mo.workers = workers;
        const auto corpus = named(ids, signals, rate);
        const auto mat = [&] {
          py::gil_scoped_release release;
          return transfer_matrix(ptrs, corpus, mo);
        }();
        return py::make_tuple(matrix_json(mat).dump(), matrix_csv(mat));
      },
      py::arg("models"), py::arg("ids"), py::arg("signals"), py::arg("sample_rate"), py::arg("kind") = "sufficient",
      py::arg("epsilon") = kDefaultEpsilon, py::arg("delta") = 0.5, py::arg("granularity") = 0, py::arg("workers") = 1);

  m.def(
      "compose",
      [](const PyClassifier& c, const std::vector<std::string>& ids, const std::vector<Array>& signals, int rate) {
        const auto corpus = named(ids, signals, rate);
        const auto sig = compose_global(*c.ptr, corpus);
        return py::make_tuple(to_json(sig).dump(), to_array(sig.signal.samples()));
      },
      py::arg("classifier"), py::arg("ids"), py::arg("signals"), py::arg("sample_rate"));
  m.def(
      "transplant",
      [](const PyClassifier& c, const Array& composite, const Array& target, int rate, const std::string& mode) {
        if (mode != "add" && mode != "replace") throw Error(ErrorKind::InvalidParameter, "mode must be add or replace");
        CompositeSignature comp{to_signal(composite, rate)};
        comp.class_index = top1(classify(*c.ptr, comp.signal));
        comp.class_label = c.ptr->labels()[comp.class_index];
        comp.oracle_id = c.ptr->id();
        const auto r = cross_label_transplant(*c.ptr, comp, to_signal(target, rate),
                                              mode == "add" ? TransplantMode::Add : TransplantMode::Replace);
        return py::make_tuple(r.flipped, r.original_class, top1(r.distribution), to_array(r.signal.samples()));
      },
      py::arg("classifier"), py::arg("composite"), py::arg("target"), py::arg("sample_rate"), py::arg("mode") = "add");

  m.def(
      "forward_fft",
      [](const Array& samples, std::size_t n_fft) {
        const Signal s = to_signal(samples, 1);
        const auto spec = forward_fft(s, n_fft == 0 ? s.size() : n_fft);
        py::array_t<std::complex<double>> out(static_cast<py::ssize_t>(spec.n_bins()));
        std::copy(spec.bins().begin(), spec.bins().end(), out.mutable_data());
        return out;
      },
      py::arg("samples"), py::arg("n_fft") = 0);
  m.def(
      "inverse_fft",
      [](const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& bins, std::size_t n_fft,
         std::size_t out_len) {
        const Spectrum spec(std::vector<Complex>(bins.data(), bins.data() + bins.size()), n_fft, 1);
        return to_array(inverse_fft(spec, out_len == 0 ? n_fft : out_len).samples());
      },
      py::arg("bins"), py::arg("n_fft"), py::arg("out_len") = 0);

  m.def(
      "psd",
      [](const Array& samples, int rate, const std::string& window, std::size_t nperseg, std::size_t overlap) {
        const auto e = psd(to_signal(samples, rate), psd_config(window, nperseg, overlap));
        return py::make_tuple(to_array(e.freqs), to_array(e.power));
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("window") = "rect", py::arg("welch_nperseg") = 0,
      py::arg("welch_overlap") = 0);
  m.def(
      "spectral_entropy",
      [](const Array& samples, int rate, bool normalized, const std::string& window, std::size_t nperseg,
         std::size_t overlap) {
        return spectral_entropy(to_signal(samples, rate), normalized, psd_config(window, nperseg, overlap));
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("normalized") = true, py::arg("window") = "rect",
      py::arg("welch_nperseg") = 0, py::arg("welch_overlap") = 0);
  m.def(
      "stoi",
      [](const Array& clean, const Array& degraded, int rate) { return stoi(to_signal(clean, rate), to_signal(degraded, rate)); },
      py::arg("clean"), py::arg("degraded"), py::arg("sample_rate"));
  m.def(
      "levenshtein",
      [](const std::string& a, const std::string& b, const std::string& level) {
        return token_level(level) == TokenLevel::Word ? levenshtein_words(a, b) : levenshtein(a, b);
      },
      py::arg("a"), py::arg("b"), py::arg("level") = "char");
  m.def(
      "levenshtein_ratio",
      [](const std::string& a, const std::string& b, const std::string& level) { return levenshtein_ratio(a, b, token_level(level)); },
      py::arg("a"), py::arg("b"), py::arg("level") = "char");
  m.def(
      "mann_whitney_u",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const auto r = mann_whitney_u(x, y);
        return py::make_tuple(r.u, r.z, r.p_value);
      },
      py::arg("x"), py::arg("y"));
  m.def(
      "paired_t_test",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const auto r = paired_t_test(x, y);
        return py::make_tuple(r.t, r.p_value, r.dof);
      },
      py::arg("x"), py::arg("y"));

  m.def(
      "read_wav",
      [](const std::string& path) {
        const Signal s = wav::read(path);
        return py::make_tuple(to_array(s.samples()), s.sample_rate());
      },
      py::arg("path"));
  m.def(
      "write_wav",
      [](const std::string& path, const Array& samples, int rate, const std::string& format) {
        if (format != "float32" && format != "pcm16") throw Error(ErrorKind::InvalidParameter, "format must be float32 or pcm16");
        wav::write(path, to_signal(samples, rate), format == "pcm16" ? wav::SampleFormat::Pcm16 : wav::SampleFormat::Float32);
      },
      py::arg("path"), py::arg("samples"), py::arg("sample_rate"), py::arg("format") = "float32");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
