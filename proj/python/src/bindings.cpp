#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "beliefbench/artifact.hpp"
#include "beliefbench/bench.hpp"
#include "beliefbench/corpus.hpp"
#include "beliefbench/eval/agents.hpp"
#include "beliefbench/eval/runner.hpp"
#include "beliefbench/pipeline.hpp"

namespace py = pybind11;
using namespace beliefbench;

namespace {

struct PyCorpus {
  corpus::Corpus corpus;
  Vocabulary vocab;

  std::vector<std::vector<lang::Sentence>> documents() const {
    std::vector<std::vector<lang::Sentence>> out;
    for (const auto& d : corpus.documents) out.push_back(d.sentences);
    return out;
  }
};

struct PyBench {
  std::vector<bench::TestCase> cases;
  Vocabulary vocab;
};

py::dict stats_dict(const corpus::CorpusStats& s) {
  py::dict d;
  d["true_atomic_facts"] = s.true_atomic_facts;
  d["atomic_sentences"] = s.atomic_sentences;
  d["tf_sentences"] = s.tf_sentences;
  d["connective_sentences"] = s.connective_sentences;
  d["total_sentences"] = s.total_sentences;
  d["documents"] = s.documents;
  d["tokens"] = s.tokens;
  d["subjects"] = s.subjects;
  d["relations"] = s.relations;
  d["objects"] = s.objects;
  return d;
}

ArtifactHeader header_for(std::uint64_t seed) { return make_header(seed, {{"source", "python"}}); }

// Probability of a sentence, a claim or a truth prompt; a labelled false
// sentence gives the probability of the label.
double sentence_probability(const oracle::Oracle& o, const std::string& text) {
  const auto& vocab = o.vocab();
  try {
    const auto s = lang::parse(text, vocab);
    const double p = o.truth_probability(s.claim);
    return s.label.value_or(true) ? p : 1.0 - p;
  } catch (const lang::ParseError& first) {
    try {
      return o.truth_probability(lang::parse_truth_prompt(text, vocab));
    } catch (const lang::ParseError&) {
      throw first;
    }
  }
}

// Python callable as a probe responder: dict in, dict out.
class CallableResponder : public eval::Responder {
 public:
  explicit CallableResponder(py::function fn) : fn_(std::move(fn)) {}
  eval::ProbeResponse respond(const eval::ProbeQuery& q) override {
    py::dict query;
    query["id"] = q.id;
    query["kind"] = std::string(eval::kind_name(q.kind));
    query["prompt"] = q.prompt;
    if (q.candidate) query["candidate"] = *q.candidate;
    if (q.weight) query["weight"] = *q.weight;
    eval::ProbeResponse r;
    r.id = q.id;
    try {
      const py::object out = fn_(query);
      if (out.is_none()) return r;
      const auto d = out.cast<py::dict>();
      if (d.contains("probability") && !d["probability"].is_none())
        r.probability = d["probability"].cast<double>();
      if (d.contains("text") && !d["text"].is_none()) r.text = d["text"].cast<std::string>();
      if (d.contains("error") && !d["error"].is_none()) r.error = d["error"].cast<std::string>();
    } catch (const py::error_already_set& e) {
      r.error = e.what();
    }
    if (r.probability && !(*r.probability >= 0.0 && *r.probability <= 1.0))
      throw eval::ProtocolError("probability outside [0, 1] in response '" + r.id + "'");
    return r;
  }

 private:
  py::function fn_;
};

std::string evaluate(const PyBench& b, const py::object& model, const oracle::Oracle* oracle,
                     const PyCorpus* corpus, const std::string& weight,
                     const std::vector<std::string>& subsets) {
  std::unique_ptr<eval::Responder> responder;
  std::string name;
  if (py::isinstance<py::str>(model)) {
    name = model.cast<std::string>();
    if (name == "bayes") {
      if (!oracle) throw Error("model 'bayes' needs an oracle");
      responder = std::make_unique<eval::BayesAgent>(*oracle);
    } else if (name == "memorizer" || name == "stale") {
      if (!corpus) throw Error("model '" + name + "' needs a corpus");
      const auto docs = corpus->documents();
      responder = std::make_unique<eval::MemorizerAgent>(b.vocab, docs, name == "memorizer");
    } else {
      throw Error("unknown model '" + name + "'");
    }
  } else {
    name = "python";
    responder = std::make_unique<CallableResponder>(model.cast<py::function>());
  }
  if (weight != "auto" && weight != "fixed") throw Error("weight must be 'auto' or 'fixed'");
  eval::LocalClient client(*responder);
  eval::EvalOptions opts;
  opts.model_name = name;
  opts.weight_mode = weight == "auto" ? bench::WeightMode::automatic : bench::WeightMode::fixed;
  opts.subsets = subsets;
  const auto report = eval::run_eval(b.cases, client, b.vocab, opts);
  std::ostringstream out;
  eval::write_report_json(out, report, make_header(0, {{"model", name}, {"weight", weight}}));
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Synthetic belief-revision benchmark for model editing";
  m.attr("__version__") = std::string(kToolVersion);
  py::register_exception<Error>(m, "BeliefbenchError", PyExc_ValueError);

  py::class_<world::WorldModel>(m, "World")
      .def_property_readonly("num_facts", [](const world::WorldModel& w) { return w.facts().size(); })
      .def_property_readonly("floor", &world::WorldModel::floor)
      .def_property_readonly("conditioned_fraction", &world::WorldModel::conditioned_fraction)
      .def(
          "facts",
          [](const world::WorldModel& w) {
            const auto& v = w.vocab();
            py::list out;
            for (const auto& f : w.facts())
              out.append(py::make_tuple(v.entity_surface(f.subject), v.relation_surface(f.relation),
                                        v.entity_surface(f.ground_truth),
                                        v.entity_surface(f.distractor), f.conditioned()));
            return out;
          },
          "(subject, relation, ground truth, distractor, conditioned) per fact")
      .def(
          "dependencies",
          [](const world::WorldModel& w) {
            const auto& v = w.vocab();
            py::list out;
            for (const auto& p : w.deps().pairs())
              out.append(py::make_tuple(v.relation_surface(p.upstream),
                                        v.relation_surface(p.downstream)));
            return out;
          },
          "(upstream, downstream) relation pairs")
      .def("save",
           [](const world::WorldModel& w, const std::filesystem::path& path, std::uint64_t seed) {
             pipeline::save_world(path, w, header_for(seed));
           },
           py::arg("path"), py::arg("seed") = 0)
      .def_static("load", &pipeline::load_world, py::arg("path"));

  m.def(
      "synth_world",
      [](std::size_t subjects, std::size_t relations, std::size_t objects, std::size_t min_cooccur,
         std::size_t top_k, double floor, std::uint64_t seed) {
        pipeline::SynthOptions s;
        s.subjects = subjects;
        s.relations = relations;
        s.objects = objects;
        pipeline::WorldOptions w;
        w.min_cooccur = min_cooccur;
        w.top_k = top_k;
        w.floor = floor;
        w.seed = seed;
        return pipeline::synth_world(s, w);
      },
      py::arg("subjects") = 400, py::arg("relations") = 10, py::arg("objects") = 20,
      py::arg("min_cooccur") = 10, py::arg("top_k") = 10, py::arg("floor") = 0.6,
      py::arg("seed") = 0, "Build a world from a synthetic knowledge graph");

  py::class_<PyCorpus>(m, "Corpus")
      .def_property_readonly("stats", [](const PyCorpus& c) { return stats_dict(c.corpus.stats); })
      .def_property_readonly("num_facts", [](const PyCorpus& c) { return c.corpus.facts.size(); })
      .def(
          "facts",
          [](const PyCorpus& c) {
            py::list out;
            for (const auto& k : c.corpus.facts)
              out.append(py::make_tuple(c.vocab.entity_surface(k.subject),
                                        c.vocab.relation_surface(k.relation)));
            return out;
          },
          "(subject, relation) of every fact the corpus covers")
      .def(
          "documents",
          [](const PyCorpus& c) {
            std::vector<std::string> out;
            for (const auto& d : c.corpus.documents) out.push_back(lang::render_document(d.sentences, c.vocab));
            return out;
          },
          "Rendered documents, one string each")
      .def(
          "emit",
          [](const PyCorpus& c, const world::WorldModel& w, const std::filesystem::path& dir,
             std::uint64_t seed) {
            const auto paths = corpus::emit_corpus(w, c.corpus, dir, header_for(seed));
            return py::make_tuple(paths.corpus, paths.stats, paths.vocabulary);
          },
          py::arg("world"), py::arg("dir"), py::arg("seed") = 0,
          "Write corpus, stats and vocabulary files into dir");

  m.def(
      "generate_corpus",
      [](const world::WorldModel& w, std::size_t facts, std::size_t connectives_per_subject,
         std::size_t max_per_doc, std::uint64_t seed) {
        corpus::CorpusOptions o;
        o.target_facts = facts;
        o.connectives_per_subject = connectives_per_subject;
        o.max_per_doc = max_per_doc;
        o.seed = seed;
        return PyCorpus{corpus::generate_corpus(w, o), w.vocab()};
      },
      py::arg("world"), py::arg("facts") = 1000, py::arg("connectives_per_subject") = 20,
      py::arg("max_per_doc") = 10, py::arg("seed") = 0);

  py::class_<oracle::Oracle::Token>(m, "Snapshot");

  py::class_<oracle::Oracle>(m, "Oracle")
      .def(
          "next_object",
          [](const oracle::Oracle& o, const std::string& prompt) {
            const auto key = lang::parse_next_object_prompt(prompt, o.vocab());
            const auto d = o.predictive(key.subject, key.relation);
            py::dict out;
            for (std::size_t i = 0; i < d.objects.size(); ++i)
              out[py::str(o.vocab().entity_surface(d.objects[i]))] = d.probs[i];
            return out;
          },
          py::arg("prompt"), "p(o | \"s r\") over the support, keyed by object name")
      .def("probability", &sentence_probability, py::arg("sentence"),
           "Probability of an atomic sentence, a claim, a labelled sentence or a truth prompt")
      .def(
          "min_weight",
          [](oracle::Oracle& o, const std::string& atom, double threshold) {
            return o.min_weight_for(lang::parse_atom(atom, o.vocab()), threshold);
          },
          py::arg("atom"), py::arg("threshold") = 0.95)
      .def(
          "edit",
          [](oracle::Oracle& o, const std::string& atom, double weight) {
            o.apply_edit(lang::parse_atom(atom, o.vocab()), weight);
          },
          py::arg("atom"), py::arg("weight"))
      .def("snapshot", &oracle::Oracle::snapshot)
      .def("restore", &oracle::Oracle::restore, py::arg("snapshot"))
      .def_property_readonly("content_hash", &oracle::Oracle::content_hash)
      .def("save",
           [](const oracle::Oracle& o, const std::filesystem::path& path, std::uint64_t seed) {
             pipeline::save_oracle(path, o, header_for(seed));
           },
           py::arg("path"), py::arg("seed") = 0)
      .def_static("load", &pipeline::load_oracle, py::arg("path"));

  m.def(
      "fit_oracle",
      [](const world::WorldModel& w, const PyCorpus& c) {
        return pipeline::fit_oracle(w.vocab(), w.deps(), c.documents());
      },
      py::arg("world"), py::arg("corpus"));

  py::class_<PyBench>(m, "Bench")
      .def("__len__", [](const PyBench& b) { return b.cases.size(); })
      .def(
          "to_jsonl",
          [](const PyBench& b, std::uint64_t seed) {
            std::ostringstream out;
            bench::write_bench(out, b.cases, b.vocab, header_for(seed));
            return out.str();
          },
          py::arg("seed") = 0)
      .def(
          "subsets",
          [](const PyBench& b) {
            const auto s = bench::split_subsets(b.cases);
            py::dict d;
            d["all"] = s.all;
            d["downstream_change"] = s.downstream_change;
            d["error_fixing"] = s.error_fixing;
            return d;
          },
          "Case indices per subset")
      .def("save",
           [](const PyBench& b, const std::filesystem::path& path, std::uint64_t seed) {
             pipeline::save_bench(path, b.cases, b.vocab, header_for(seed));
           },
           py::arg("path"), py::arg("seed") = 0)
      .def_static(
          "load",
          [](const std::filesystem::path& path, const world::WorldModel& w) {
            return PyBench{pipeline::load_bench(path, w.vocab()), w.vocab()};
          },
          py::arg("path"), py::arg("world"));

  m.def(
      "gen_cases",
      [](const world::WorldModel& w, oracle::Oracle& o, std::size_t n_cases, double threshold,
         double weight_fixed, double error_fixing_rate, double downstream_preference,
         std::uint64_t seed) {
        bench::BenchOptions b;
        b.n_cases = n_cases;
        b.threshold = threshold;
        b.weight_fixed = weight_fixed;
        b.error_fixing_rate = error_fixing_rate;
        b.downstream_preference = downstream_preference;
        b.seed = seed;
        return PyBench{bench::gen_cases(w, o, b), w.vocab()};
      },
      py::arg("world"), py::arg("oracle"), py::arg("n_cases") = 5000, py::arg("threshold") = 0.95,
      py::arg("weight_fixed") = 1000.0, py::arg("error_fixing_rate") = 0.5,
      py::arg("downstream_preference") = 0.8, py::arg("seed") = 0);

  m.def("evaluate_json", &evaluate, py::arg("bench"), py::arg("model"),
        py::arg("oracle") = nullptr, py::arg("corpus") = nullptr, py::arg("weight") = "auto",
        py::arg("subsets") = std::vector<std::string>{"all", "downstream_change", "error_fixing"},
        "Run the benchmark against a built-in model name or a Python callable; returns report JSON");

  m.def(
      "render_report",
      [](const std::string& report_json) {
        std::istringstream in(report_json);
        ArtifactHeader header;
        const auto report = eval::read_report_json(in, &header);
        return eval::render_report(report, header);
      },
      py::arg("report_json"));
}
