#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fiberasym/cli.hpp"

namespace fs = std::filesystem;
using namespace fiberasym;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Input, "cli", "read_spec", "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_outputs(const cli::Output& out, const std::string& dir, const std::string& default_name) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  auto files = out.files;
  if (files.empty()) files[default_name] = out.text;
  for (const auto& [name, content] : files) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    if (!f) throw Error(ErrorKind::Input, "cli", "write_outputs", "cannot write into '" + dir + "'");
    f << content;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leading asymptotics of degenerate fiber integrals I(z) = ∫ g(z f(x), x) dx"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string spec_path, out_dir;
  cli::Flags flags;
  std::uint64_t seed = 0;
  double tolerance = 0.0, z_min = 0.0, z_max = 0.0;
  int z_points = 0, quad_order = 0;
  auto* o_seed = app.add_option("--seed", seed, "Seed for Monte Carlo rules and quasi-random oracles");
  auto* o_tol = app.add_option("--tolerance", tolerance, "Relative-gap threshold for validate (default 0.05)");
  auto* o_zmin = app.add_option("--z-min", z_min, "Smallest z of the oracle grid");
  auto* o_zmax = app.add_option("--z-max", z_max, "Largest z of the oracle grid");
  auto* o_zpts = app.add_option("--z-points", z_points, "Number of geometric z grid points");
  auto* o_quad = app.add_option("--quad-order", quad_order, "Sphere rule order");
  app.add_option("--threads", flags.threads, "Worker threads for oracle sampling")->check(CLI::PositiveNumber);
  app.add_option("--spec", spec_path, "Problem file (JSON)");
  app.add_option("--out", out_dir, "Directory for emitted files");

  auto* c_classify = app.add_subcommand("classify", "Classify the critical point of the germ");
  auto* c_schedule = app.add_subcommand("schedule", "Exponent/log schedule from the pole lattice");
  int sched_n = 0, sched_k = 0, sched_count = 8;
  c_schedule->add_option("--n", sched_n, "Dimension");
  c_schedule->add_option("--k", sched_k, "Degree of the leading homogeneous part");
  c_schedule->add_option("--count", sched_count, "Number of entries")->check(CLI::PositiveNumber);
  auto* c_predict = app.add_subcommand("predict", "Predict the leading term");
  auto* c_coarea = app.add_subcommand("coarea", "Co-area density LVol(w) as CSV");
  auto* c_validate = app.add_subcommand("validate", "Predict, run the oracle, fit, and compare");
  auto* c_example = app.add_subcommand("example", "Run a built-in fixture through validate");
  std::string example_name;
  bool print_spec = false;
  c_example->add_option("name", example_name, "Fixture name")->required();
  c_example->add_flag("--print-spec", print_spec, "Print the fixture as a problem file instead of running it");
  auto* c_mellin = app.add_subcommand("mellin-check", "Damped Mellin transform of e^{it} at 1/2");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kInputError;
  }
  if (o_seed->count()) flags.seed = seed;
  if (o_tol->count()) flags.tolerance = tolerance;
  if (o_zmin->count()) flags.z_min = z_min;
  if (o_zmax->count()) flags.z_max = z_max;
  if (o_zpts->count()) flags.z_points = z_points;
  if (o_quad->count()) flags.quad_order = quad_order;

  try {
    auto load = [&]() {
      if (spec_path.empty()) throw Error(ErrorKind::Input, "cli", "run", "--spec is required for this command");
      auto s = cli::parse_spec_text(read_file(spec_path));
      cli::apply_flags(s, flags);
      return s;
    };
    cli::Output out;
    std::string name;
    if (*c_classify) {
      out = cli::cmd_classify(load());
      name = "classification.json";
    } else if (*c_schedule) {
      if (sched_n == 0 || sched_k == 0) {
        const auto s = load();
        if (!s.germ) throw Error(ErrorKind::Input, "cli", "schedule", "need --n/--k or a germ");
        sched_n = s.germ->n();
        sched_k = s.germ->k();
      }
      out = cli::cmd_schedule(sched_n, sched_k, sched_count);
      name = "schedule.csv";
    } else if (*c_predict) {
      out = cli::cmd_predict(load());
      name = "prediction.json";
    } else if (*c_coarea) {
      out = cli::cmd_coarea(load());
      name = "coarea.csv";
    } else if (*c_validate) {
      out = cli::cmd_validate(load(), flags.threads);
    } else if (*c_example) {
      auto s = cli::fixture(example_name);
      cli::apply_flags(s, flags);
      if (print_spec) {
        out.text = cli::dump(cli::to_json(s));
        name = example_name + ".json";
      } else {
        out = cli::cmd_validate(s, flags.threads);
      }
    } else if (*c_mellin) {
      out = cli::cmd_mellin_check(flags.tolerance.value_or(1e-3));
      name = "mellin.json";
    }
    std::cout << out.text;
    write_outputs(out, out_dir, name);
    return out.code;
  } catch (const Error& e) {
    std::cerr << "fiberasym: " << e.what() << '\n';
    return cli::exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "fiberasym: cli::run: input: " << e.what() << '\n';
    return cli::kInputError;
  }
}
