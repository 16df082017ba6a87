#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "codeattn/analysis.hpp"
#include "codeattn/checkpoint.hpp"
#include "codeattn/corpus.hpp"
#include "codeattn/encoder.hpp"
#include "codeattn/error.hpp"
#include "codeattn/java_lexer.hpp"
#include "codeattn/subtok.hpp"

namespace py = pybind11;
using namespace codeattn;

namespace {

// Holds the config alongside the inference view so checkpoints can be saved.
struct PyEncoder {
  EncoderConfig config;
  EncoderParams params;
  Encoder encoder;

  PyEncoder(EncoderParams p, const EncoderConfig& c) : config(c), params(std::move(p)), encoder(params, config) {}
};

py::array_t<double> attention_array(const AttentionTensor& att) {
  const auto n = att.seq_len();
  py::array_t<double> out({att.layers(), att.heads(), n, n});
  auto view = out.mutable_unchecked<4>();
  for (std::size_t l = 0; l < att.layers(); ++l) {
    for (std::size_t h = 0; h < att.heads(); ++h) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) view(l, h, i, j) = att.at(l, h, i, j);
      }
    }
  }
  return out;
}

py::dict forward_dict(const ForwardOutput& out) {
  py::dict d;
  d["hidden_states"] = out.hidden_states;
  d["attention"] = attention_array(out.attention);
  d["pooled"] = Eigen::VectorXd(out.pooled.transpose());
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "codeattn: small Java code encoder with attention analyses";
  m.attr("__version__") = CODEATTN_VERSION;

  py::register_exception<Error>(m, "CodeattnError", PyExc_ValueError);

  m.def("strip_comments", [](const std::string& source) { return strip_comments(source); });
  m.def(
      "lex",
      [](const std::string& source) {
        py::list out;
        for (const auto& t : lex(source)) {
          out.append(py::make_tuple(t.text, std::string(to_string(t.type)), t.line, t.column));
        }
        return out;
      },
      "Tokens as (text, type, line, column) tuples.");
  m.def(
      "jensen_shannon",
      [](const std::vector<double>& p, const std::vector<double>& q) { return jensen_shannon(p, q); },
      "Jensen-Shannon divergence in bits.");

  py::class_<Vocab>(m, "Vocab")
      .def_static("load", &Vocab::load)
      .def_static(
          "train",
          [](const std::filesystem::path& corpus_dir, std::size_t target_size) {
            return train_vocab(word_counts(load_java_directory(corpus_dir)), target_size);
          },
          py::arg("corpus_dir"), py::arg("target_size") = 8192)
      .def("save", &Vocab::save)
      .def("__len__", &Vocab::size)
      .def("piece", &Vocab::piece)
      .def("id", [](const Vocab& v, const std::string& piece) { return v.id(piece); })
      .def("segment", [](const Vocab& v, const std::string& word) { return segment_word(word, v); })
      .def(
          "encode_source",
          [](const Vocab& v, const std::string& source, std::size_t max_len) {
            const auto framed = tokenize(lex(strip_comments(source)), v, max_len);
            return py::make_tuple(framed.ids, framed.segments);
          },
          py::arg("source"), py::arg("max_len") = 256, "Framed [CLS] ... [SEP] ids and segment ids.");

  py::class_<PyEncoder>(m, "Encoder")
      .def_static(
          "random",
          [](int layers, int heads, int hidden, int vocab_size, int max_len, std::uint64_t seed) {
            EncoderConfig c;
            c.num_layers = layers;
            c.num_heads = heads;
            c.hidden_dim = hidden;
            c.ffn_dim = 4 * hidden;
            c.vocab_size = vocab_size;
            c.max_seq_len = max_len;
            c.seed = seed;
            c.validate();
            return PyEncoder(init_params(c), c);
          },
          py::arg("layers") = 4, py::arg("heads") = 4, py::arg("hidden") = 128, py::arg("vocab_size") = 8192,
          py::arg("max_len") = 256, py::arg("seed") = 42)
      .def_static("load",
                  [](const std::filesystem::path& path) {
                    Checkpoint c = load_checkpoint(path);
                    return PyEncoder(std::move(c.params), c.config);
                  })
      .def("save", [](const PyEncoder& e, const std::filesystem::path& path) { save_checkpoint(path, e.params, e.config); })
      .def_property_readonly("config", [](const PyEncoder& e) { return e.config.describe(); })
      .def_property_readonly("checksum", [](const PyEncoder& e) { return checksum(e.params); })
      .def(
          "encode",
          [](const PyEncoder& e, const std::vector<int>& ids, std::optional<std::vector<int>> segments) {
            const std::vector<int> segs = segments ? *segments : std::vector<int>(ids.size(), 0);
            ForwardOutput out;
            {
              py::gil_scoped_release release;
              out = e.encoder.encode(ids, segs);
            }
            return forward_dict(out);
          },
          py::arg("ids"), py::arg("segments") = py::none(),
          "Dict with hidden_states (list of seq x hidden), attention (layers x heads x seq x seq) and pooled.");
}
