#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qlearn/generator.hpp"
#include "qlearn/learner.hpp"
#include "qlearn/omtbdd.hpp"
#include "qlearn/oracles.hpp"
#include "qlearn/pipeline.hpp"
#include "qlearn/sweep.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("writing " + path + " failed");
}

void write_or_print(const std::string& path, const std::string& content) {
  if (path.empty())
    std::cout << content;
  else
    write_file(path, content);
}

qlearn::omtbdd load_diagram(const std::string& path) {
  return qlearn::decode(read_file(path));
}

int env_threads() {
  const char* raw = std::getenv("QLEARN_THREADS");
  if (!raw || !*raw) return 1;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || v < 1 || v > 256)
    throw std::runtime_error("QLEARN_THREADS must be a number in [1, 256]");
  return static_cast<int>(v);
}

std::vector<int> parse_grid(const std::string& text) {
  std::vector<int> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      grid.push_back(v);
    } catch (const std::exception&) {
      throw std::runtime_error("bad grid entry \"" + item + "\"");
    }
  }
  if (grid.empty()) throw std::runtime_error("the grid is empty");
  return grid;
}

qlearn::sweep_axis parse_axis(const std::string& name) {
  if (name == "nodes") return qlearn::sweep_axis::nodes;
  if (name == "vars") return qlearn::sweep_axis::vars;
  if (name == "values" || name == "leaves") return qlearn::sweep_axis::values;
  throw std::runtime_error("unknown axis \"" + name +
                           "\" (expected nodes, vars, or values)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact query learning of multi-terminal binary decision diagrams"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Draw a random reduced diagram");
  int gen_n = 0, gen_m = 0, gen_k = 2;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--n", gen_n, "node count of the result")->required();
  gen->add_option("--m", gen_m, "number of variables")->required();
  gen->add_option("--k", gen_k, "number of sink values");
  gen->add_option("--seed", gen_seed, "random seed");
  gen->add_option("--out", gen_out, "output file (stdout when absent)");
  gen->callback([&] {
    qlearn::generator_params params;
    params.nodes = gen_n;
    params.num_vars = gen_m;
    params.num_values = gen_k;
    params.seed = gen_seed;
    const qlearn::omtbdd d = qlearn::generate_diagram(params);
    const std::string header =
        "# generated nodes=" + std::to_string(gen_n) +
        " vars=" + std::to_string(gen_m) + " values=" + std::to_string(gen_k) +
        " seed=" + std::to_string(gen_seed) + "\n";
    write_or_print(gen_out, header + qlearn::encode(d));
  });

  // learn
  auto* learn_cmd = app.add_subcommand("learn", "Learn a target diagram from queries");
  std::string learn_target, learn_events, learn_out;
  bool learn_cache = false, learn_check = false, learn_suffix = false;
  learn_cmd->add_option("--target", learn_target, "target diagram file")->required();
  learn_cmd->add_flag("--cache-mq", learn_cache,
                      "memoize membership queries and report distinct count");
  learn_cmd->add_flag("--check-invariants", learn_check,
                      "run the full state checker after every update (slow)");
  learn_cmd->add_flag("--addedge-suffix", learn_suffix,
                      "use shortened strings when wiring new edges");
  learn_cmd->add_option("--events", learn_events, "write the event log here");
  learn_cmd->add_option("--out", learn_out, "write the learned diagram here");
  learn_cmd->callback([&] {
    const qlearn::omtbdd target = load_diagram(learn_target);
    qlearn::diagram_membership direct_mq(target);
    qlearn::caching_membership cached_mq(direct_mq);
    qlearn::diagram_equivalence eq(target);

    qlearn::learn_options opts;
    opts.num_values_hint = target.num_values;
    opts.addedge_suffix = learn_suffix;
    if (learn_check) {
      opts.check_invariants = true;
      opts.reference = &target;
    }
    std::ofstream events;
    if (!learn_events.empty()) {
      events.open(learn_events, std::ios::binary);
      if (!events)
        throw std::runtime_error("cannot open " + learn_events + " for writing");
      opts.event_sink = [&events](const std::string& line) {
        events << line << '\n';
      };
    }

    qlearn::membership_oracle& mq =
        learn_cache ? static_cast<qlearn::membership_oracle&>(cached_mq)
                    : direct_mq;
    const qlearn::learn_result result =
        qlearn::learn(target.num_vars, mq, eq, opts);
    if (!result.violations.empty()) {
      for (const std::string& v : result.violations)
        std::cerr << "violation: " << v << '\n';
      throw std::runtime_error("invariant check failed with " +
                               std::to_string(result.violations.size()) +
                               " finding(s)");
    }
    std::cout << "nodes " << result.diagram.nodes.size() << '\n'
              << "membership_queries " << result.stats.membership_queries << '\n';
    if (learn_cache)
      std::cout << "distinct_membership_queries " << direct_mq.calls() << '\n';
    std::cout << "equivalence_queries " << result.stats.equivalence_queries
              << '\n';
    if (!learn_out.empty()) write_file(learn_out, qlearn::encode(result.diagram));
  });

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a query-count grid");
  std::string sweep_axis_name, sweep_grid, sweep_csv;
  int sweep_n = 100, sweep_m = 64, sweep_k = 8, sweep_trials = 10;
  std::uint64_t sweep_seed = 0;
  sweep_cmd->add_option("--axis", sweep_axis_name, "nodes, vars, or values")
      ->required();
  sweep_cmd->add_option("--grid", sweep_grid, "comma-separated axis values")
      ->required();
  sweep_cmd->add_option("--n", sweep_n, "fixed node count");
  sweep_cmd->add_option("--m", sweep_m, "fixed variable count");
  sweep_cmd->add_option("--k", sweep_k, "fixed value count");
  sweep_cmd->add_option("--trials", sweep_trials, "runs per grid value");
  sweep_cmd->add_option("--seed", sweep_seed, "base seed");
  sweep_cmd->add_option("--csv", sweep_csv, "output file (stdout when absent)");
  sweep_cmd->callback([&] {
    qlearn::sweep_spec spec;
    spec.axis = parse_axis(sweep_axis_name);
    spec.grid = parse_grid(sweep_grid);
    spec.nodes = sweep_n;
    spec.num_vars = sweep_m;
    spec.num_values = sweep_k;
    spec.trials = sweep_trials;
    spec.seed = sweep_seed;
    spec.threads = env_threads();
    write_or_print(sweep_csv, qlearn::to_csv(qlearn::run_sweep(spec)));
  });

  // compile
  auto* compile_cmd =
      app.add_subcommand("compile", "Compile a tree classifier into a diagram");
  std::string compile_model, compile_data, compile_out, compile_report;
  compile_cmd->add_option("--classifier", compile_model, "classifier document")
      ->required();
  compile_cmd->add_option("--data", compile_data, "samples CSV")->required();
  compile_cmd->add_option("--out", compile_out, "write the diagram here");
  compile_cmd->add_option("--report", compile_report,
                          "write the report here (stdout when absent)");
  compile_cmd->callback([&] {
    const qlearn::tree_classifier model =
        qlearn::load_classifier(read_file(compile_model));
    const std::vector<qlearn::dataset_row> rows =
        qlearn::parse_dataset(read_file(compile_data));
    const qlearn::compile_result result =
        qlearn::compile_classifier(model, rows);
    if (!compile_out.empty())
      write_file(compile_out, qlearn::encode(result.diagram));
    write_or_print(compile_report, qlearn::format_report(result.report));
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a diagram on one input");
  std::string eval_file, eval_input;
  eval_cmd->add_option("file", eval_file, "diagram file")->required();
  eval_cmd->add_option("--input", eval_input, "assignment as a 0/1 string")
      ->required();
  eval_cmd->callback([&] {
    const qlearn::omtbdd d = load_diagram(eval_file);
    const qlearn::bitstring bits = qlearn::bitstring::from_text(eval_input);
    if (static_cast<int>(bits.size()) != d.num_vars)
      throw std::runtime_error("input has " + std::to_string(bits.size()) +
                               " bits, the diagram reads " +
                               std::to_string(d.num_vars) + " variables");
    std::cout << qlearn::eval(d, bits) << '\n';
  });

  // equiv
  auto* equiv_cmd =
      app.add_subcommand("equiv", "Compare two diagrams as functions");
  std::string equiv_a, equiv_b;
  equiv_cmd->add_option("first", equiv_a, "diagram file")->required();
  equiv_cmd->add_option("second", equiv_b, "diagram file")->required();
  equiv_cmd->callback([&] {
    const qlearn::omtbdd a = load_diagram(equiv_a);
    const qlearn::omtbdd b = load_diagram(equiv_b);
    if (a.num_vars != b.num_vars)
      throw std::runtime_error("diagrams read different variable counts (" +
                               std::to_string(a.num_vars) + " vs " +
                               std::to_string(b.num_vars) + ")");
    const auto witness = qlearn::find_difference(a, b);
    if (!witness)
      std::cout << "YES\n";
    else
      std::cout << "NO " << witness->text() << '\n';
  });

  // reduce
  auto* reduce_cmd = app.add_subcommand("reduce", "Canonicalize a diagram");
  std::string reduce_file, reduce_out;
  reduce_cmd->add_option("file", reduce_file, "diagram file")->required();
  reduce_cmd->add_option("--out", reduce_out, "output file (stdout when absent)");
  reduce_cmd->callback([&] {
    write_or_print(reduce_out,
                   qlearn::encode(qlearn::reduce(load_diagram(reduce_file))));
  });

  // dot
  auto* dot_cmd = app.add_subcommand("dot", "Render a diagram for graphviz");
  std::string dot_file, dot_out;
  dot_cmd->add_option("file", dot_file, "diagram file")->required();
  dot_cmd->add_option("--out", dot_out, "output file (stdout when absent)");
  dot_cmd->callback(
      [&] { write_or_print(dot_out, qlearn::to_dot(load_diagram(dot_file))); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
