#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "beliefbench/artifact.hpp"
#include "beliefbench/bench.hpp"
#include "beliefbench/corpus.hpp"
#include "beliefbench/eval/agents.hpp"
#include "beliefbench/eval/metrics.hpp"
#include "beliefbench/eval/runner.hpp"
#include "beliefbench/eval/transport.hpp"
#include "beliefbench/language.hpp"
#include "beliefbench/pipeline.hpp"

namespace fs = std::filesystem;
using namespace beliefbench;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitEmpty = 3;

// default file names inside the output directory
constexpr const char* kWorldFile = "world.txt";
constexpr const char* kOracleFile = "oracle.txt";
constexpr const char* kBenchFile = "bench.jsonl";
constexpr const char* kReportFile = "report.txt";

struct Globals {
  std::string out_dir = ".";
  std::string config;
  bool quiet = false;
};

Globals g;

void info(const std::string& line) {
  if (!g.quiet) std::cerr << line << '\n';
}

fs::path in_dir(const std::string& explicit_path, const char* name) {
  return explicit_path.empty() ? fs::path(g.out_dir) / name : fs::path(explicit_path);
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::string num(double x) { return format_double(x); }
std::string num(std::size_t x) { return std::to_string(x); }

// Config hash recorded in the header of an upstream artifact, so a
// downstream header names exactly what it was built from.
std::string upstream_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string head(4096, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  static const std::regex re(R"(config[-_]hash"?:\s*"?([0-9a-f]{16}))");
  std::smatch m;
  return std::regex_search(head, m, re) ? m[1].str() : std::string("none");
}

// ---------------------------------------------------------------------------
// world

struct WorldArgs {
  pipeline::WorldOptions world;
  pipeline::SynthOptions synth;
  std::string triples, names, out;
  std::size_t limit = 2'000'000;
};

void report_world(const pipeline::WorldSummary& s, const fs::path& out) {
  for (const auto& w : s.ingest.warnings) info("warning: " + w);
  info("world: " + num(s.facts) + " facts over " + num(s.relations_kept) + " relations, " +
       num(s.dependency_pairs) + " dependency pairs, conditioned fraction " +
       num(s.conditioned_fraction));
  info("wrote " + out.string());
}

std::vector<std::pair<std::string, std::string>> world_knobs(const WorldArgs& a) {
  return {{"min-cooccur", num(a.world.min_cooccur)},
          {"top-k", num(a.world.top_k)},
          {"floor", num(a.world.floor)}};
}

int world_synth(const WorldArgs& a) {
  auto knobs = world_knobs(a);
  knobs.insert(knobs.end(), {{"subjects", num(a.synth.subjects)},
                             {"relations", num(a.synth.relations)},
                             {"objects", num(a.synth.objects)}});
  const auto header = make_header(a.world.seed, knobs);
  pipeline::WorldSummary summary;
  const auto model = pipeline::synth_world(a.synth, a.world, &summary);
  const fs::path out = in_dir(a.out, kWorldFile);
  ensure_parent(out);
  pipeline::save_world(out, model, header);
  report_world(summary, out);
  return 0;
}

int world_build(const WorldArgs& a) {
  std::ifstream triples(a.triples, std::ios::binary);
  if (!triples) throw Error("triples file not found: '" + a.triples + "'");
  std::ifstream names;
  if (!a.names.empty()) {
    names.open(a.names, std::ios::binary);
    if (!names) throw Error("names file not found: '" + a.names + "'");
  }
  auto knobs = world_knobs(a);
  knobs.emplace_back("limit", num(a.limit));
  const auto header = make_header(a.world.seed, knobs);
  world::IngestOptions ingest;
  ingest.limit = a.limit;
  pipeline::WorldSummary summary;
  const auto model = pipeline::build_world(triples, a.names.empty() ? nullptr : &names, ingest,
                                           a.world, &summary);
  const fs::path out = in_dir(a.out, kWorldFile);
  ensure_parent(out);
  pipeline::save_world(out, model, header);
  info("ingested " + num(summary.ingest.rows_read) + " rows (" + num(summary.ingest.malformed) +
       " malformed, " + num(summary.ingest.excluded) + " excluded)");
  report_world(summary, out);
  return 0;
}

// ---------------------------------------------------------------------------
// corpus

struct CorpusArgs {
  corpus::CorpusOptions options;
  std::string world;
};

int corpus_gen(const CorpusArgs& a) {
  const fs::path world_path = in_dir(a.world, kWorldFile);
  const auto model = pipeline::load_world(world_path);
  const auto header = make_header(
      a.options.seed, {{"facts", num(a.options.target_facts)},
                       {"connectives-per-subject", num(a.options.connectives_per_subject)},
                       {"max-per-doc", num(a.options.max_per_doc)},
                       {"world", upstream_hash(world_path)}});
  const auto c = corpus::generate_corpus(model, a.options);
  fs::create_directories(g.out_dir);
  const auto paths = corpus::emit_corpus(model, c, g.out_dir, header);
  const auto& s = c.stats;
  info("corpus: " + num(s.true_atomic_facts) + " facts, " + num(s.atomic_sentences) + " atomic, " +
       num(s.tf_sentences) + " T/F, " + num(s.connective_sentences) + " connective sentences in " +
       num(s.documents) + " documents, " + num(s.tokens) + " tokens");
  info("wrote " + paths.corpus.string() + ", " + paths.stats.string() + ", " +
       paths.vocabulary.string());
  return 0;
}

// ---------------------------------------------------------------------------
// oracle

struct OracleArgs {
  std::string corpus, vocab, oracle, out, sentence, weight = "auto95";
};

int oracle_fit(const OracleArgs& a) {
  const auto defaults = corpus::corpus_paths(g.out_dir);
  const fs::path corpus_path = a.corpus.empty() ? defaults.corpus : fs::path(a.corpus);
  const fs::path vocab_path = !a.vocab.empty()          ? fs::path(a.vocab)
                              : a.corpus.empty()        ? defaults.vocabulary
                                                        : corpus::corpus_paths(corpus_path.parent_path()).vocabulary;
  const auto vf = pipeline::load_vocabulary(vocab_path);
  const auto docs = pipeline::load_corpus(corpus_path, vf.vocab);
  const auto header = make_header(0, {{"alpha", "1"}, {"corpus", upstream_hash(corpus_path)}});
  const auto o = pipeline::fit_oracle(vf.vocab, vf.deps, docs);
  const fs::path out = in_dir(a.out, kOracleFile);
  ensure_parent(out);
  pipeline::save_oracle(out, o, header);
  info("oracle fitted on " + num(docs.size()) + " documents, " + num(o.subjects().size()) +
       " subjects");
  info("wrote " + out.string());
  return 0;
}

void print_distribution(const oracle::Oracle& o, EntityId s, RelationId r) {
  const auto dist = o.predictive(s, r);
  std::vector<std::size_t> order(dist.objects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return dist.probs[x] > dist.probs[y]; });
  std::cout << "rule: " << (o.uses_marginal(s, r) ? "marginal" : "basic") << '\n';
  for (std::size_t i : order)
    std::cout << format_double(dist.probs[i]) << '\t' << o.vocab().entity_surface(dist.objects[i])
              << '\n';
}

int oracle_query(const OracleArgs& a) {
  const auto o = pipeline::load_oracle(in_dir(a.oracle, kOracleFile));
  const auto& vocab = o.vocab();
  try {
    const FactKey key = lang::parse_next_object_prompt(a.sentence, vocab);
    print_distribution(o, key.subject, key.relation);
    return 0;
  } catch (const lang::ParseError&) {
  }
  lang::Claim claim;
  bool value = true;
  try {
    const auto sentence = lang::parse(a.sentence, vocab);
    claim = sentence.claim;
    if (sentence.label) value = *sentence.label;
  } catch (const lang::ParseError& first) {
    try {
      claim = lang::parse_truth_prompt(a.sentence, vocab);
    } catch (const lang::ParseError&) {
      throw first;
    }
  }
  const double p = o.truth_probability(claim);
  std::cout << format_double(value ? p : 1.0 - p) << '\n';
  return 0;
}

int oracle_edit(const OracleArgs& a) {
  auto o = pipeline::load_oracle(in_dir(a.oracle, kOracleFile));
  const auto atom = lang::parse_atom(a.sentence, o.vocab());
  double weight = 0;
  if (a.weight.rfind("auto", 0) == 0) {
    const std::string pct = a.weight.substr(4);
    const double threshold = pct.empty() ? 0.95 : parse_double(pct) / 100.0;
    weight = o.min_weight_for(atom, threshold);
  } else {
    weight = parse_double(a.weight);
    if (!(weight >= 0)) throw Error("--weight must be a nonnegative number or auto95");
  }
  const double before = o.probability(atom);
  o.apply_edit(atom, weight);
  std::cout << "edit: " << lang::render(atom, o.vocab()) << '\n'
            << "weight: " << format_double(weight) << '\n'
            << "before: " << format_double(before) << '\n'
            << "after: " << format_double(o.probability(atom)) << '\n';
  if (!a.out.empty()) {
    ensure_parent(a.out);
    pipeline::save_oracle(a.out, o,
                          make_header(0, {{"edit", lang::render(atom, o.vocab())},
                                          {"weight", format_double(weight)}}));
    info("wrote " + a.out);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  bench::BenchOptions options;
  std::string world, oracle, out;
};

int bench_gen(const BenchArgs& a) {
  const fs::path world_path = in_dir(a.world, kWorldFile);
  const fs::path oracle_path = in_dir(a.oracle, kOracleFile);
  if (!fs::exists(world_path))
    throw Error("bench gen needs a world: '" + world_path.string() +
                "' not found (run `world synth` or `world build`)");
  if (!fs::exists(oracle_path))
    throw Error("bench gen needs a fitted oracle: '" + oracle_path.string() +
                "' not found (run `oracle fit`)");
  const auto model = pipeline::load_world(world_path);
  auto o = pipeline::load_oracle(oracle_path);
  const auto& opt = a.options;
  const auto header = make_header(
      opt.seed, {{"cases", num(opt.n_cases)},
                 {"threshold", num(opt.threshold)},
                 {"weight-fixed", num(opt.weight_fixed)},
                 {"error-fixing-rate", num(opt.error_fixing_rate)},
                 {"downstream-preference", num(opt.downstream_preference)},
                 {"world", upstream_hash(world_path)},
                 {"oracle", upstream_hash(oracle_path)}});
  const auto cases = bench::gen_cases(model, o, opt);
  const fs::path out = in_dir(a.out, kBenchFile);
  ensure_parent(out);
  pipeline::save_bench(out, cases, o.vocab(), header);
  const auto split = bench::split_subsets(cases);
  info("bench: " + num(cases.size()) + " cases, " + num(split.downstream_change.size()) +
       " with downstream changes, " + num(split.error_fixing.size()) + " error fixing");
  info("wrote " + out.string());
  return 0;
}

// ---------------------------------------------------------------------------
// agents

struct AgentArgs {
  std::string model = "bayes";
  std::string oracle, corpus, vocab;
};

std::unique_ptr<eval::Responder> make_agent(const AgentArgs& a, const fs::path& default_vocab) {
  if (a.model == "bayes")
    return std::make_unique<eval::BayesAgent>(pipeline::load_oracle(in_dir(a.oracle, kOracleFile)));
  if (a.model == "memorizer" || a.model == "stale") {
    const auto defaults = corpus::corpus_paths(g.out_dir);
    const fs::path vocab_path = a.vocab.empty() ? default_vocab : fs::path(a.vocab);
    const auto vf = pipeline::load_vocabulary(vocab_path);
    const auto docs =
        pipeline::load_corpus(a.corpus.empty() ? defaults.corpus : fs::path(a.corpus), vf.vocab);
    return std::make_unique<eval::MemorizerAgent>(vf.vocab, docs, a.model == "memorizer");
  }
  throw Error("unknown built-in model '" + a.model + "' (bayes, memorizer, stale)");
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  AgentArgs agent;
  std::string bench, report, json;
  std::vector<std::string> subsets;
  std::string weight = "auto";
  std::size_t window = 32;
  long timeout_ms = 30000;
};

std::string subset_name(const std::string& flag) {
  if (flag == "all") return "all";
  if (flag == "downstream") return "downstream_change";
  if (flag == "errorfix") return "error_fixing";
  throw Error("unknown subset '" + flag + "'");
}

int eval_run(const EvalArgs& a) {
  const fs::path bench_path = in_dir(a.bench, kBenchFile);
  const fs::path vocab_path = a.agent.vocab.empty()
                                  ? corpus::corpus_paths(bench_path.parent_path()).vocabulary
                                  : fs::path(a.agent.vocab);
  const auto vf = pipeline::load_vocabulary(vocab_path);
  const auto cases = pipeline::load_bench(bench_path, vf.vocab);

  eval::EvalOptions options;
  options.model_name = a.agent.model;
  options.weight_mode = a.weight == "fixed" ? bench::WeightMode::fixed : bench::WeightMode::automatic;
  options.subsets.clear();
  for (const auto& s : a.subsets.empty() ? std::vector<std::string>{"all", "downstream", "errorfix"}
                                         : a.subsets)
    options.subsets.push_back(subset_name(s));

  const auto timeout = std::chrono::milliseconds(a.timeout_ms);
  std::unique_ptr<eval::Responder> agent;
  std::unique_ptr<eval::ProbeClient> client;
  const std::string& model = a.agent.model;
  if (model.rfind("exec:", 0) == 0) {
    client = std::make_unique<eval::ExecClient>(model.substr(5), a.window, timeout);
  } else if (model.rfind("tcp:", 0) == 0) {
    client = std::make_unique<eval::TcpClient>(model.substr(4), a.window, timeout);
  } else {
    AgentArgs built_in = a.agent;
    if (built_in.vocab.empty()) built_in.vocab = vocab_path.string();
    agent = make_agent(built_in, vocab_path);
    client = std::make_unique<eval::LocalClient>(*agent);
  }

  std::string subsets_knob;
  for (const auto& s : options.subsets) subsets_knob += (subsets_knob.empty() ? "" : ",") + s;
  const auto header = make_header(0, {{"model", model},
                                      {"weight", a.weight},
                                      {"subsets", subsets_knob},
                                      {"bench", upstream_hash(bench_path)}});
  const auto report = eval::run_eval(cases, *client, vf.vocab, options);

  const fs::path report_path = in_dir(a.report, kReportFile);
  fs::path json_path = a.json.empty() ? fs::path(report_path).replace_extension(".json")
                                      : fs::path(a.json);
  if (json_path == report_path) json_path += ".json";
  ensure_parent(report_path);
  ensure_parent(json_path);
  write_file_atomically(report_path,
                        [&](std::ostream& out) { out << eval::render_report(report, header); });
  write_file_atomically(json_path,
                        [&](std::ostream& out) { eval::write_report_json(out, report, header); });
  info("evaluated " + num(report.evaluated) + " of " + num(report.total) + " cases (" +
       num(report.failed) + " failed)");
  info("wrote " + report_path.string() + ", " + json_path.string());
  if (report.evaluated == 0) {
    std::cerr << "error: no case was evaluated\n";
    return kExitEmpty;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// report / serve

struct ReportArgs {
  std::string json, out;
};

int report_render(const ReportArgs& a) {
  std::ifstream in(a.json, std::ios::binary);
  if (!in) throw Error("report file not found: '" + a.json + "'");
  ArtifactHeader header;
  const auto report = eval::read_report_json(in, &header);
  const std::string text = eval::render_report(report, header);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    ensure_parent(a.out);
    write_file_atomically(a.out, [&](std::ostream& out) { out << text; });
  }
  return 0;
}

struct ServeArgs {
  AgentArgs agent;
  int listen = -1;
  bool once = false;
};

int serve(const ServeArgs& a) {
  const auto agent = make_agent(a.agent, corpus::corpus_paths(g.out_dir).vocabulary);
  if (a.listen < 0) {
    eval::serve_stream(*agent, 0, 1);
    return 0;
  }
  const auto listener = eval::listen_tcp(static_cast<std::uint16_t>(a.listen));
  std::cerr << "listening on 127.0.0.1:" << listener.port << std::endl;
  do {
    eval::serve_one_connection(*agent, listener);
  } while (!a.once);
  return 0;
}

// ---------------------------------------------------------------------------
// config file

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t n = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CLI::ConversionError(path + ":" + std::to_string(n) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

bool given_on_command_line(const CLI::Option& opt, const std::vector<std::string>& args) {
  for (const auto& name : opt.get_lnames()) {
    const std::string flag = "--" + name;
    for (const auto& arg : args)
      if (arg == flag || arg.rfind(flag + "=", 0) == 0) return true;
  }
  for (const auto& name : opt.get_snames())
    for (const auto& arg : args)
      if (arg.rfind("-" + name, 0) == 0 && arg.rfind("--", 0) != 0) return true;
  return false;
}

void collect_names(const CLI::App& app, std::set<std::string>& names) {
  for (const auto* opt : app.get_options())
    for (const auto& n : opt->get_lnames()) names.insert(n);
  for (const auto* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    collect_names(*sub, names);
}

// Flags from the config file for options of the chosen subcommand chain
// that the command line did not set.
std::vector<std::string> config_injections(CLI::App& app, const std::vector<std::string>& args) {
  const auto config = read_config(g.config);
  std::set<std::string> known;
  collect_names(app, known);
  for (const auto& [key, value] : config)
    if (!known.count(key)) throw CLI::ConversionError("unknown config key '" + key + "'");

  std::vector<std::string> extra;
  std::vector<CLI::App*> chain{&app};
  while (!chain.back()->get_subcommands().empty())
    chain.push_back(chain.back()->get_subcommands().front());
  for (auto* level : chain) {
    for (const auto* opt : level->get_options()) {
      if (opt->get_lnames().empty() || opt->get_lnames().front() == "config") continue;
      const auto it = config.find(opt->get_lnames().front());
      if (it == config.end() || given_on_command_line(*opt, args)) continue;
      if (opt->get_expected_max() == 0) {
        const std::string& v = it->second;
        if (v == "true" || v == "1" || v == "yes" || v == "on") extra.push_back("--" + it->first);
      } else {
        extra.push_back("--" + it->first);
        extra.push_back(it->second);
      }
    }
  }
  return extra;
}

void parse_args(CLI::App& app, std::vector<std::string> args) {
  std::reverse(args.begin(), args.end());
  app.parse(args);
}

int run(int argc, char** argv) {
  CLI::App app{"Synthetic belief-revision benchmark for model editing"};
  app.name("beliefbench");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kToolVersion));
  app.add_option("--out-dir", g.out_dir, "Directory for default input and output files")
      ->envname("BELIEFBENCH_OUT");
  app.add_option("--config", g.config, "Flat key=value file supplying defaults for flags");
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress messages");

  std::vector<std::pair<CLI::App*, std::function<int()>>> commands;

  // world
  WorldArgs wa;
  auto* world_cmd = app.add_subcommand("world", "Build the hypothetical world")->require_subcommand(1);
  auto add_world_knobs = [&](CLI::App* c) {
    c->add_option("--min-cooccur", wa.world.min_cooccur, "Minimum co-occurrence count per relation")
        ->capture_default_str();
    c->add_option("--top-k", wa.world.top_k, "Relations kept")->capture_default_str();
    c->add_option("--floor", wa.world.floor, "Modal probability floor")
        ->check(CLI::Range(0.5, 1.0))
        ->capture_default_str();
    c->add_option("--seed", wa.world.seed, "Random seed")->capture_default_str();
    c->add_option("--out", wa.out, "World archive (default OUT_DIR/world.txt)");
  };
  auto* synth_cmd = world_cmd->add_subcommand("synth", "Synthesize a knowledge graph and world");
  add_world_knobs(synth_cmd);
  synth_cmd->add_option("--subjects", wa.synth.subjects)->capture_default_str();
  synth_cmd->add_option("--relations", wa.synth.relations)->capture_default_str();
  synth_cmd->add_option("--objects", wa.synth.objects, "Objects per relation")->capture_default_str();
  commands.emplace_back(synth_cmd, [&] {
    // desk scale needs a lower co-occurrence cut than a full extract
    if (synth_cmd->count("--min-cooccur") == 0) wa.world.min_cooccur = 10;
    return world_synth(wa);
  });
  auto* build_cmd = world_cmd->add_subcommand("build", "Build a world from a triple file");
  add_world_knobs(build_cmd);
  build_cmd->add_option("--triples", wa.triples, "TSV of subject, relation, object")->required();
  build_cmd->add_option("--names", wa.names, "TSV of entity key and display name");
  build_cmd->add_option("--limit", wa.limit, "Rows read")->capture_default_str();
  commands.emplace_back(build_cmd, [&] { return world_build(wa); });

  // corpus
  CorpusArgs ca;
  auto* corpus_cmd = app.add_subcommand("corpus", "Generate the training corpus")->require_subcommand(1);
  auto* gen_cmd = corpus_cmd->add_subcommand("gen", "Sample a corpus from the world");
  gen_cmd->add_option("--world", ca.world, "World archive (default OUT_DIR/world.txt)");
  gen_cmd->add_option("--facts", ca.options.target_facts)->capture_default_str();
  gen_cmd->add_option("--connectives-per-subject", ca.options.connectives_per_subject)
      ->capture_default_str();
  gen_cmd->add_option("--max-per-doc", ca.options.max_per_doc, "Sentences per document")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen_cmd->add_option("--seed", ca.options.seed)->capture_default_str();
  commands.emplace_back(gen_cmd, [&] { return corpus_gen(ca); });

  // oracle
  OracleArgs oa;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exact Bayesian oracle")->require_subcommand(1);
  auto* fit_cmd = oracle_cmd->add_subcommand("fit", "Fit the oracle to a corpus");
  fit_cmd->add_option("--corpus", oa.corpus, "Corpus file (default OUT_DIR/corpus.txt)");
  fit_cmd->add_option("--vocab", oa.vocab, "Vocabulary (default vocab.txt beside the corpus)");
  fit_cmd->add_option("--out", oa.out, "Oracle state (default OUT_DIR/oracle.txt)");
  commands.emplace_back(fit_cmd, [&] { return oracle_fit(oa); });
  auto* query_cmd = oracle_cmd->add_subcommand("query", "Posterior for a prompt or sentence");
  query_cmd->add_option("--oracle", oa.oracle, "Oracle state (default OUT_DIR/oracle.txt)");
  query_cmd->add_option("--sentence", oa.sentence, "\"s r\" prompt, claim or labelled sentence")
      ->required();
  commands.emplace_back(query_cmd, [&] { return oracle_query(oa); });
  auto* edit_cmd = oracle_cmd->add_subcommand("edit", "Apply a weighted edit");
  edit_cmd->add_option("--oracle", oa.oracle, "Oracle state (default OUT_DIR/oracle.txt)");
  edit_cmd->add_option("--sentence", oa.sentence, "Atomic sentence to assert")->required();
  edit_cmd->add_option("--weight", oa.weight, "Pseudo-observations n, or auto95")
      ->capture_default_str();
  edit_cmd->add_option("--out", oa.out, "Write the edited oracle here");
  commands.emplace_back(edit_cmd, [&] { return oracle_edit(oa); });

  // bench
  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "Edit-request benchmark")->require_subcommand(1);
  auto* bgen_cmd = bench_cmd->add_subcommand("gen", "Draw test cases and compute targets");
  bgen_cmd->add_option("--world", ba.world, "World archive (default OUT_DIR/world.txt)");
  bgen_cmd->add_option("--oracle", ba.oracle, "Fitted oracle (default OUT_DIR/oracle.txt)");
  bgen_cmd->add_option("--out", ba.out, "Benchmark file (default OUT_DIR/bench.jsonl)");
  bgen_cmd->add_option("--cases", ba.options.n_cases)->capture_default_str();
  bgen_cmd->add_option("--threshold", ba.options.threshold, "Posterior reached by the auto weight")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  bgen_cmd->add_option("--weight-fixed", ba.options.weight_fixed)->capture_default_str();
  bgen_cmd->add_option("--error-fixing-rate", ba.options.error_fixing_rate)
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  bgen_cmd->add_option("--downstream-preference", ba.options.downstream_preference)
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  bgen_cmd->add_option("--seed", ba.options.seed)->capture_default_str();
  commands.emplace_back(bgen_cmd, [&] { return bench_gen(ba); });

  // eval
  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model")->require_subcommand(1);
  auto* run_cmd = eval_cmd->add_subcommand("run", "Run the benchmark against a model");
  run_cmd->add_option("--bench", ea.bench, "Benchmark file (default OUT_DIR/bench.jsonl)");
  run_cmd->add_option("--model", ea.agent.model, "bayes, memorizer, stale, exec:CMD or tcp:HOST:PORT")
      ->capture_default_str();
  run_cmd->add_option("--subset", ea.subsets, "all, downstream or errorfix (repeatable)")
      ->check(CLI::IsMember({"all", "downstream", "errorfix"}));
  run_cmd->add_option("--weight", ea.weight, "Edit weight: auto or fixed")
      ->check(CLI::IsMember({"auto", "fixed"}))
      ->capture_default_str();
  run_cmd->add_option("--report", ea.report, "Text report (default OUT_DIR/report.txt)");
  run_cmd->add_option("--json", ea.json, "JSON companion (default report path with .json)");
  run_cmd->add_option("--oracle", ea.agent.oracle, "Oracle for the bayes model");
  run_cmd->add_option("--corpus", ea.agent.corpus, "Corpus for the memorizer models");
  run_cmd->add_option("--vocab", ea.agent.vocab, "Vocabulary (default vocab.txt beside the bench)");
  run_cmd->add_option("--window", ea.window, "Queries in flight for external models")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--timeout-ms", ea.timeout_ms, "Per-response timeout for external models")
      ->capture_default_str();
  commands.emplace_back(run_cmd, [&] { return eval_run(ea); });

  // report
  ReportArgs ra;
  auto* report_cmd = app.add_subcommand("report", "Render a report from its JSON companion");
  report_cmd->add_option("--json", ra.json, "Report JSON")->required();
  report_cmd->add_option("--out", ra.out, "Write here instead of stdout");
  commands.emplace_back(report_cmd, [&] { return report_render(ra); });

  // serve
  ServeArgs sa;
  auto* serve_cmd = app.add_subcommand("serve", "Answer the probe protocol with a built-in model");
  serve_cmd->add_option("--model", sa.agent.model, "bayes, memorizer or stale")
      ->check(CLI::IsMember({"bayes", "memorizer", "stale"}))
      ->capture_default_str();
  serve_cmd->add_option("--oracle", sa.agent.oracle, "Oracle for the bayes model");
  serve_cmd->add_option("--corpus", sa.agent.corpus, "Corpus for the memorizer models");
  serve_cmd->add_option("--vocab", sa.agent.vocab, "Vocabulary for the memorizer models");
  serve_cmd->add_option("--listen", sa.listen, "Serve TCP on 127.0.0.1:PORT instead of stdio");
  serve_cmd->add_flag("--once", sa.once, "Exit after the first connection");
  commands.emplace_back(serve_cmd, [&] { return serve(sa); });

  const std::vector<std::string> args(argv + 1, argv + argc);
  try {
    try {
      std::vector<std::string> merged = args;
      if (std::find_if(args.begin(), args.end(), [](const std::string& a) {
            return a == "--config" || a.rfind("--config=", 0) == 0;
          }) != args.end()) {
        // first pass only locates the config file and the subcommand chain;
        // options the config supplies may still be missing here
        try {
          parse_args(app, args);
        } catch (const CLI::RequiredError&) {
        } catch (const CLI::RequiresError&) {
        }
        if (!g.config.empty()) {
          const auto extra = config_injections(app, args);
          merged.insert(merged.end(), extra.begin(), extra.end());
        }
        app.clear();
        g = Globals{};
      }
      parse_args(app, merged);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      std::cerr << "error: " << e.what() << "\n\n" << app.help();
      return kExitUsage;
    }
    for (auto& [cmd, fn] : commands)
      if (cmd->parsed()) return fn();
    std::cerr << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
