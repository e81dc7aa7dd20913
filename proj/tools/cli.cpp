#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <variant>

#include "CLI11.hpp"
#include "gfl/densela.hpp"
#include "gfl/io.hpp"

namespace gfl::cli {

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Demands use their own stream so they are not a copy of the graph's draws.
constexpr std::uint64_t kDemandSeedMix = 0x9e3779b97f4a7c15ULL;

struct Options {
  std::string task = "electric_gd";
  std::string graph = "fc";
  int n = 10;
  int skip = 0;
  std::string layers = "10";
  double delta = 0.0;
  double temp = 0.5;
  int k = 1;
  double mu = 0.0;
  int trials = 1;
  std::uint64_t seed = 0;
  std::string project = "on";
  std::string engine = "full";
  std::string format = "csv";
  std::string out;
};

struct Given {
  bool skip = false;
  bool delta = false;
  bool k = false;
  bool mu = false;
};

struct RunConfig {
  TaskSpec task;
  std::variant<std::string, Graph> graph;  // "fc" / "csl" or a loaded file
  int n = 10;
  std::optional<int> skip;
  std::optional<double> delta;
  std::optional<int> k;
  std::optional<double> mu;
  int trials = 1;
  std::uint64_t seed = 0;
  bool project_demands = true;
  Engine engine = Engine::full;
  bool json = false;
  std::string out;
};

std::vector<int> parse_layer_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    int v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size() || v < 0) {
      throw ConfigError("--layers: '" + item + "' is not a non-negative integer");
    }
    out.push_back(v);
  }
  return out;
}

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("GFL_SEED: '" + text + "' is not an unsigned 64-bit integer");
  }
  return v;
}

void add_graph_options(CLI::App& cmd, Options& o) {
  cmd.add_option("--graph", o.graph, "fc, csl or a graph JSON file")->capture_default_str();
  cmd.add_option("--n", o.n, "vertex count")->capture_default_str()->check(CLI::Range(2, 1000));
  cmd.add_option("--skip", o.skip, "CSL skip length (random from {2,4,6,8} if omitted)");
  cmd.add_option("--seed", o.seed, "base seed; trial t uses seed + t")->capture_default_str();
}

void add_run_options(CLI::App& cmd, Options& o) {
  add_graph_options(cmd, o);
  cmd.add_option("--task", o.task, "electric_gd, sqrt_series, heat_series, electric_fast, heat_fast, "
                                   "subspace_top_k, subspace_bottom_k")
      ->capture_default_str();
  cmd.add_option("--layers", o.layers, "layer count (run) or comma-separated list (sweep)")->capture_default_str();
  cmd.add_option("--delta", o.delta, "step size (default 1/lambda_max per graph)");
  cmd.add_option("--temp", o.temp, "heat-kernel temperature s")->capture_default_str();
  cmd.add_option("--k", o.k, "number of demands / eigenvectors (default: Psi = I_hat, or 1 for subspace tasks)");
  cmd.add_option("--mu", o.mu, "shift for subspace_bottom_k (default lambda_max per graph)");
  cmd.add_option("--trials", o.trials, "number of trials")->capture_default_str()->check(CLI::PositiveNumber);
  cmd.add_option("--project-demands", o.project, "project demands off the constant vector")
      ->capture_default_str()
      ->check(CLI::IsMember({"on", "off"}));
  cmd.add_option("--engine", o.engine, "full or efficient dynamics")
      ->capture_default_str()
      ->check(CLI::IsMember({"full", "efficient"}));
  cmd.add_option("--format", o.format, "report format")->capture_default_str()->check(CLI::IsMember({"json", "csv"}));
  cmd.add_option("--out", o.out, "output file (default stdout)");
}

Given given_of(const CLI::App& cmd) {
  auto given = [&](const std::string& name) {
    const auto* opt = cmd.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  return {given("--skip"), given("--delta"), given("--k"), given("--mu")};
}

std::variant<std::string, Graph> resolve_graph(const std::string& source) {
  if (source == "fc" || source == "csl") return source;
  try {
    return load_graph(source);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("--graph: ") + e.what());
  }
}

RunConfig resolve(const Options& o, const Given& given, int layers) {
  RunConfig c;
  const auto kind = parse_task_kind(o.task);
  if (!kind) throw ConfigError("--task: unknown task '" + o.task + "'");
  c.task.kind = *kind;
  c.task.layers = layers;
  c.task.temperature = o.temp;
  c.task.k = given.k ? o.k : 1;
  if (given.delta) c.task.step = o.delta;
  if (given.mu) c.task.shift = o.mu;
  c.graph = resolve_graph(o.graph);
  c.n = o.n;
  if (given.skip) c.skip = o.skip;
  if (given.delta) c.delta = o.delta;
  if (given.k) c.k = o.k;
  if (given.mu) c.mu = o.mu;
  c.trials = o.trials;
  c.seed = o.seed;
  c.project_demands = o.project == "on";
  c.engine = o.engine == "full" ? Engine::full : Engine::efficient;
  c.json = o.format == "json";
  c.out = o.out;

  // Checks that do not depend on the sampled graph; step and shift are
  // filled in per trial when not given.
  TaskSpec probe = c.task;
  if (!given.delta) probe.step = 1.0;
  try {
    probe.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (c.engine == Engine::efficient && (c.task.kind == TaskKind::electric_fast || c.task.kind == TaskKind::heat_fast)) {
    throw ConfigError(std::string(to_string(c.task.kind)) + " has no efficient-dynamics form; use --engine full");
  }
  return c;
}

Graph make_graph(const RunConfig& c, std::uint64_t seed) {
  if (const auto* g = std::get_if<Graph>(&c.graph)) return *g;
  if (std::get<std::string>(c.graph) == "fc") return generate_fc(c.n, seed);
  return c.skip ? generate_csl(c.n, *c.skip, seed) : generate_csl_random_skip(c.n, seed);
}

DemandSet make_demands(const RunConfig& c, int n, std::uint64_t seed) {
  const std::uint64_t s = seed ^ kDemandSeedMix;
  switch (c.task.kind) {
    case TaskKind::subspace_top_k:
    case TaskKind::subspace_bottom_k: return sample_demands(n, c.task.k, false, s);
    case TaskKind::electric_fast:
    case TaskKind::heat_fast: return identity_demands(n);
    default: return c.k ? sample_demands(n, *c.k, c.project_demands, s) : identity_demands(n);
  }
}

ErrorReport run_trial(const RunConfig& c, int trial, int layers) {
  const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(trial);
  ErrorReport report;
  report.task = c.task;
  report.task.layers = layers;
  report.engine = c.engine;
  try {
    const Graph g = make_graph(c, seed);
    const auto eig = sym_eig(laplacian(build_incidence(g)));
    const double lambda_max = eig.largest();
    // Kept if the trial fails below.
    report.metadata.lambda_min = eig.smallest_nonzero();
    report.metadata.lambda_max = lambda_max;
    report.metadata.n = g.num_vertices();
    report.metadata.d = g.num_edges();
    TaskSpec task = report.task;
    task.lambda_max_hint = lambda_max;
    if (!c.delta) task.step = 1.0 / lambda_max;
    if (!c.mu) task.shift = lambda_max;
    const DemandSet demands = make_demands(c, g.num_vertices(), seed);
    if (!task.is_subspace()) task.k = demands.count();
    report.task = task;
    report = run_task(g, task, demands, c.engine);
  } catch (const std::exception& e) {
    report.layers.clear();
    report.failure = e.what();
  }
  report.metadata.seed = seed;
  report.metadata.trial = trial;
  return report;
}

void emit(const RunConfig& c, const std::vector<ErrorReport>& reports, std::ostream& out) {
  std::string text;
  if (c.json) {
    text = reports_to_json(reports);
  } else {
    text = std::string(csv_header()) + "\n";
    for (const auto& r : reports) text += report_csv_rows(r);
  }
  if (c.out.empty()) {
    out << text;
    return;
  }
  try {
    write_text(c.out, text);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

int summarize(const RunConfig& c, const std::vector<ErrorReport>& reports, std::ostream& out, std::ostream& err) {
  std::size_t passed = 0;
  std::optional<double> worst;
  for (const auto& r : reports) {
    if (r.all_satisfied()) ++passed;
    if (r.failed()) err << "trial " << r.metadata.trial << " failed: " << r.failure << "\n";
    if (const auto m = r.worst_margin()) worst = std::max(worst.value_or(*m), *m);
  }
  std::ostream& log = c.out.empty() ? err : out;
  log << "passed " << passed << "/" << reports.size() << " runs; worst error/bound "
      << (worst ? format_double(*worst) : std::string("na")) << "\n";
  return passed == reports.size() ? kOk : kBoundViolation;
}

int cmd_generate(const Options& o, const Given& given, std::ostream& out) {
  if (o.graph != "fc" && o.graph != "csl") throw ConfigError("generate: --graph must be fc or csl");
  if (o.out.empty()) throw ConfigError("generate: --out is required");
  Graph g = o.graph == "fc" ? generate_fc(o.n, o.seed)
                            : (given.skip ? generate_csl(o.n, o.skip, o.seed) : generate_csl_random_skip(o.n, o.seed));
  try {
    save_graph(g, o.out);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  const auto eig = sym_eig(laplacian(build_incidence(g)));
  out << "n=" << g.num_vertices() << " d=" << g.num_edges() << " lambda_min=" << format_double(eig.smallest_nonzero())
      << " lambda_max=" << format_double(eig.largest()) << "\n";
  return kOk;
}

int cmd_run(const Options& o, const Given& given, std::ostream& out, std::ostream& err) {
  const auto list = parse_layer_list(o.layers);
  if (list.size() != 1) throw ConfigError("run: --layers takes a single value (use sweep for a list)");
  const RunConfig c = resolve(o, given, list.front());
  std::vector<ErrorReport> reports;
  for (int t = 0; t < c.trials; ++t) reports.push_back(run_trial(c, t, list.front()));
  emit(c, reports, out);
  return summarize(c, reports, out, err);
}

int cmd_sweep(const Options& o, const Given& given, std::ostream& out, std::ostream& err) {
  const auto list = parse_layer_list(o.layers);
  // Probe with the first depth (or 0) so static checks still run on an empty list.
  const RunConfig c = resolve(o, given, list.empty() ? 0 : list.front());
  for (int layers : list) {
    TaskSpec probe = c.task;
    probe.layers = layers;
    if (!c.delta) probe.step = 1.0;
    try {
      probe.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  std::vector<ErrorReport> reports;
  for (int t = 0; t < c.trials; ++t) {
    for (int layers : list) {
      ErrorReport r = run_trial(c, t, layers);
      if (r.layers.size() > 1) r.layers.erase(r.layers.begin(), r.layers.end() - 1);
      reports.push_back(std::move(r));
    }
  }
  emit(c, reports, out);
  if (reports.empty()) return kOk;
  return summarize(c, reports, out, err);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::optional<std::string>& env_seed) {
  CLI::App app{"Constructed graph-Transformer weights checked against exact linear algebra", "gfl"};
  app.require_subcommand(1);
  Options gen_opts, run_opts, sweep_opts;

  auto* generate = app.add_subcommand("generate", "write a random FC or CSL graph as JSON");
  add_graph_options(*generate, gen_opts);
  generate->add_option("--out", gen_opts.out, "output file")->required();

  auto* run_cmd = app.add_subcommand("run", "run one task for several trials");
  add_run_options(*run_cmd, run_opts);

  auto* sweep = app.add_subcommand("sweep", "run one task per layer count and keep the final layer");
  add_run_options(*sweep, sweep_opts);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (env_seed && !env_seed->empty()) {
      const auto seed = parse_seed(*env_seed);
      gen_opts.seed = run_opts.seed = sweep_opts.seed = seed;
    }
    if (generate->parsed()) return cmd_generate(gen_opts, given_of(*generate), out);
    if (run_cmd->parsed()) return cmd_run(run_opts, given_of(*run_cmd), out, err);
    return cmd_sweep(sweep_opts, given_of(*sweep), out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace gfl::cli
