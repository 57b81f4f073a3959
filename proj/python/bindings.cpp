#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mmner/crf.hpp"
#include "mmner/cwi.hpp"
#include "mmner/error.hpp"
#include "mmner/layers.hpp"
#include "mmner/metrics.hpp"
#include "mmner/seqdata.hpp"
#include "mmner/tagscheme.hpp"
#include "mmner/verify.hpp"
#include "mmner/wordpiece.hpp"

namespace py = pybind11;
using namespace mmner;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  Shape shape;
  for (py::ssize_t d = 0; d < a.ndim(); ++d) {
    shape.push_back(a.shape(d));
  }
  std::vector<double> data(a.data(), a.data() + a.size());
  return Tensor::leaf(std::move(shape), std::move(data));
}

py::array_t<double> array_from_tensor(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

CrfParams crf_from_arrays(const py::array_t<double>& transitions,
                          const py::array_t<double>& start, const py::array_t<double>& stop) {
  const auto t = transitions.unchecked<2>();
  const int64_t k = t.shape(0);
  CrfParams params = CrfParams::zeros(k);
  auto data = params.transitions.data();
  for (int64_t i = 0; i < k; ++i) {
    for (int64_t j = 0; j < k; ++j) {
      data[static_cast<size_t>(i * k + j)] = t(i, j);
    }
  }
  const auto s = start.unchecked<1>();
  const auto e = stop.unchecked<1>();
  for (int64_t j = 0; j < k; ++j) {
    params.start.data()[static_cast<size_t>(j)] = s(j);
    params.stop.data()[static_cast<size_t>(j)] = e(j);
  }
  return params;
}

py::dict report_to_dict(const EvalReport& report) {
  py::dict out;
  auto pack = [](const TypeMetrics& m) {
    py::dict d;
    d["precision"] = m.precision;
    d["recall"] = m.recall;
    d["f1"] = m.f1;
    d["tp"] = m.tp;
    d["support"] = m.gold;
    d["predicted"] = m.predicted;
    return d;
  };
  for (const auto& [type, metrics] : report.per_type) {
    out[type.c_str()] = pack(metrics);
  }
  out["overall"] = pack(report.overall);
  return out;
}

}  // namespace

PYBIND11_MODULE(_mmner, m) {
  m.doc() = "multimodal NER toolkit: CRF, tagging, tokenizer and metric primitives";

  py::register_exception<Error>(m, "MmnerError");

  m.attr("TAG_LABELS") = [] {
    py::list labels;
    for (auto label : TagScheme::kLabels) {
      labels.append(std::string(label));
    }
    return labels;
  }();

  m.def("tag_index", &TagScheme::index_of, py::arg("label"));

  m.def(
      "extract_spans",
      [](const std::vector<std::string>& tags, bool strict) {
        py::list out;
        for (const auto& span : extract_spans(tags, strict)) {
          out.append(py::make_tuple(span.start, span.end, span.type));
        }
        return out;
      },
      py::arg("tags"), py::arg("strict") = true,
      "maximal B-X (I-X)* runs as (start, end, type), 1-based inclusive");

  m.def(
      "parse_conll",
      [](const std::string& text, bool strict) {
        std::istringstream in(text);
        py::list out;
        for (const auto& ex :
             parse_conll(in, strict ? ParseMode::strict : ParseMode::lenient)) {
          out.append(py::make_tuple(ex.tokens, ex.tags));
        }
        return out;
      },
      py::arg("text"), py::arg("strict") = true);

  m.def(
      "evaluate",
      [](const std::vector<std::vector<std::string>>& gold,
         const std::vector<std::vector<std::string>>& pred) {
        return report_to_dict(evaluate(gold, pred));
      },
      py::arg("gold"), py::arg("pred"), "span-level precision/recall/F1, exact match");

  m.def(
      "report_table",
      [](const std::vector<std::vector<std::string>>& gold,
         const std::vector<std::vector<std::string>>& pred) {
        return report_format(evaluate(gold, pred));
      },
      py::arg("gold"), py::arg("pred"));

  m.def(
      "crf_log_likelihood",
      [](const py::array_t<double>& emissions, const std::vector<int>& tags,
         const py::array_t<double>& transitions, const py::array_t<double>& start,
         const py::array_t<double>& stop) {
        const CrfParams params = crf_from_arrays(transitions, start, stop);
        return crf_log_likelihood(tensor_from_array(emissions), tags, params).item();
      },
      py::arg("emissions"), py::arg("tags"), py::arg("transitions"), py::arg("start"),
      py::arg("stop"));

  m.def(
      "viterbi_decode",
      [](const py::array_t<double>& emissions, const py::array_t<double>& transitions,
         const py::array_t<double>& start, const py::array_t<double>& stop, bool mask_illegal) {
        const CrfParams params = crf_from_arrays(transitions, start, stop);
        auto [path, score] = viterbi_decode(tensor_from_array(emissions), params, mask_illegal);
        return py::make_tuple(path, score);
      },
      py::arg("emissions"), py::arg("transitions"), py::arg("start"), py::arg("stop"),
      py::arg("mask_illegal") = false);

  m.def(
      "sine_relu",
      [](const py::array_t<double>& x, double epsilon) {
        return array_from_tensor(sine_relu(tensor_from_array(x), epsilon));
      },
      py::arg("x"), py::arg("epsilon") = 0.0025);

  m.def(
      "softmax",
      [](const py::array_t<double>& x, int axis) {
        return array_from_tensor(softmax(tensor_from_array(x), axis));
      },
      py::arg("x"), py::arg("axis"));

  m.def(
      "top_k_indices",
      [](const std::vector<double>& values, int64_t k) { return topk_indices(values, k); },
      py::arg("values"), py::arg("k") = 5);

  m.def("preprocess_text", &preprocess_text, py::arg("text"),
        "URL removal plus whitespace tokenization");

  py::class_<SubwordVocab>(m, "SubwordVocab")
      .def_static("from_file", &SubwordVocab::from_file, py::arg("path"))
      .def("__len__", &SubwordVocab::size)
      .def("id_of", &SubwordVocab::id_of, py::arg("token"))
      .def("token_of", &SubwordVocab::token_of, py::arg("id"))
      .def(
          "tokenize",
          [](const SubwordVocab& vocab, const std::string& text) {
            const Tokenized t = tokenize(text, vocab);
            return py::make_tuple(t.ids, t.word_index);
          },
          py::arg("text"), "(subword ids, word alignment map)")
      .def(
          "detokenize",
          [](const SubwordVocab& vocab, const std::vector<int>& ids) {
            return detokenize(ids, vocab);
          },
          py::arg("ids"));

  m.def("run_verification", [](bool corrupt) {
    py::list out;
    for (const auto& check : run_verification(corrupt)) {
      out.append(py::make_tuple(check.name, check.pass, check.detail));
    }
    return out;
  }, py::arg("corrupt_gradient") = false);
}
