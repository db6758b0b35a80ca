#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "hforge/commands.hpp"
#include "hforge/expression.hpp"
#include "hforge/numerics.hpp"
#include "hforge/scenario.hpp"

namespace {

enum ExitCode { kOk = 0, kChecksFailed = 1, kParse = 2, kPrecondition = 3, kConvergence = 4 };

struct Flags {
  std::string scenario;
  std::string out = "hforge_out";
  std::optional<double> tol;
  std::optional<int> grid;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> c;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--scenario", f.scenario, "Scenario JSON file")->required();
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--tol", f.tol, "Transport tolerance override");
  app->add_option("--grid", f.grid, "Margin grid size override");
  app->add_option("--seed", f.seed, "Random seed override");
  app->add_option("--threads", f.threads, "Worker threads (env HOLONOMY_FORGE_THREADS otherwise)");
}

int execute(const std::string& command, const Flags& f) {
  hforge::Scenario s = hforge::load_scenario(f.scenario);
  if (f.tol) {
    if (!(*f.tol > 0.0)) throw hforge::PreconditionError("--tol must be positive");
    s.numerics.tol = *f.tol;
  }
  if (f.grid) s.numerics.grid = *f.grid;
  if (f.seed) s.numerics.seed = *f.seed;

  int threads = s.numerics.threads;
  if (const char* env = std::getenv("HOLONOMY_FORGE_THREADS")) threads = std::atoi(env);
  if (f.threads) threads = *f.threads;
  hforge::set_default_threads(threads);

  const std::vector<std::string> commands =
      command == "run" ? hforge::default_commands(s) : std::vector<std::string>{command};
  hforge::CommandOptions opts;
  opts.inflate_c = f.c;
  const hforge::RunOutput out = hforge::run_commands(s, commands, opts);
  hforge::write_output(out, f.out);
  std::cout << out.files.at("summary.txt");
  return out.report.all_satisfied() ? kOk : kChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hforge: symplectic connections on S2 x S2, holonomy killing and verification"};
  app.require_subcommand(1);
  Flags flags;
  std::string chosen;

  const std::vector<std::pair<std::string, std::string>> subs{
      {"run", "Run the scenario's command list"},
      {"transport", "Transport markers along one latitude"},
      {"holonomy-scan", "Holonomy residuals of the initial form on the latitude grid"},
      {"kill-holonomy", "Inflate and correct until the latitude holonomy is trivial"},
      {"inflate", "Inflate the initial form by a constant"},
      {"interpolate", "Pull back by transport and interpolate to the standard form"},
      {"verify", "Verify the forms listed in the scenario"},
      {"dehn-demo", "Dehn twist on the annulus with area checks"}};
  for (const auto& [name, help] : subs) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, flags);
    if (name == "inflate") sub->add_option("--c", flags.c, "Inflation constant (default: scenario value)");
    sub->callback([&chosen, n = name]() { chosen = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kParse;
  }

  try {
    return execute(chosen, flags);
  } catch (const hforge::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const hforge::PreconditionError& e) {
    std::cerr << "precondition violated: " << e.what() << '\n';
    return kPrecondition;
  } catch (const hforge::ConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << '\n';
    return kConvergence;
  }
}
