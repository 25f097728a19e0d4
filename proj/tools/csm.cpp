#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"

#include "csm/commands.hpp"

namespace {

// "-" or empty means stdout.
std::ostream* open_output(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
  if (path.empty() || path == "-") return &std::cout;
  holder = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*holder) {
    std::cerr << "error: cannot write " << path << '\n';
    return nullptr;
  }
  return holder.get();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contexts, systems and modalities: stochastic-matrix, Kochen-Specker and interferometer tools"};
  app.require_subcommand(1);

  std::string output = "-";
  app.add_option("--output,-o", output, "Write the report here ('-' for stdout)");

  std::string decompose_input;
  auto* decompose = app.add_subcommand("decompose", "Write a transition matrix as Tr(P' R P'' R)");
  decompose->add_option("input", decompose_input, "Transition matrix JSON ('-' for stdin)")->required();

  csm::CertifyCommandOptions certify_opts;
  auto* certify = app.add_subcommand("certify", "Decide whether a transition matrix is unistochastic");
  certify->add_option("input", certify_opts.input, "Transition matrix JSON ('-' for stdin)")->required();
  certify->add_option("--seed", certify_opts.seed, "Seed for phase-search restarts")->capture_default_str();
  certify->add_option("--tol", certify_opts.tol, "Certification tolerance")->capture_default_str();
  certify->add_option("--restarts", certify_opts.restarts, "Phase-search restarts")->capture_default_str();

  csm::KsCommandOptions ks_opts;
  std::string ks_input;
  std::uint64_t ks_seed = 0;
  std::string ks_mode = "backtracking";
  bool ks_no_shortcut = false;
  auto* ks = app.add_subcommand("ks", "Search a Kochen-Specker structure for a noncontextual assignment");
  auto* ks_in = ks->add_option("input", ks_input, "Structure file, text or JSON ('-' for stdin)");
  auto* ks_gen = ks->add_option("--generate", ks_seed, "Use a generated 9x4 structure with this seed");
  ks_in->excludes(ks_gen);
  ks->add_option("--mode", ks_mode, "exhaustive or backtracking")
      ->check(CLI::IsMember({"exhaustive", "backtracking"}))
      ->capture_default_str();
  ks->add_option("--limit", ks_opts.limit, "Assignment (exhaustive) or node (backtracking) budget")
      ->capture_default_str();
  ks->add_flag("--no-parity-shortcut", ks_no_shortcut, "Search even when a parity certificate exists");

  csm::SimulateCommandOptions sim_opts;
  std::uint64_t sim_seed = 0, sim_shots = 0;
  auto* simulate = app.add_subcommand("simulate", "Run an interferometer experiment and print the histogram");
  simulate->add_option("input", sim_opts.input, "Experiment config JSON ('-' for stdin)")->required();
  auto* sim_seed_opt = simulate->add_option("--seed", sim_seed, "Override the config seed");
  auto* sim_shots_opt = simulate->add_option("--shots", sim_shots, "Override the config shot count");
  simulate->add_flag("--json", sim_opts.json, "JSON summary instead of CSV");

  csm::BellCommandOptions bell_opts;
  auto* bell = app.add_subcommand("bell", "Singlet correlations and CHSH value for four axes");
  bell->add_option("directions", bell_opts.directions,
                   "a a' b b': degrees in the x-z plane or x,y,z vectors (default 0 90 45 135)")
      ->expected(4);

  csm::SelftestCommandOptions self_opts;
  auto* selftest = app.add_subcommand("selftest", "Run the acceptance criteria");
  selftest->add_flag("--json", self_opts.json, "Machine-readable results");
  selftest->add_option("--tol", self_opts.tol_certify, "Certification tolerance")->capture_default_str();
  selftest->add_option("--seed", self_opts.seed, "Seed for the randomized criteria")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help exits 0; any usage error joins the other input errors on 2.
    const int code = app.exit(e);
    return code == 0 ? 0 : csm::kExitInputError;
  }

  std::unique_ptr<std::ofstream> file;
  std::ostream* out = open_output(output, file);
  if (!out) return csm::kExitInputError;
  const csm::Streams io{std::cin, *out, std::cerr};

  int code = 0;
  if (*decompose) {
    code = csm::cmd_decompose(decompose_input, io);
  } else if (*certify) {
    code = csm::cmd_certify(certify_opts, io);
  } else if (*ks) {
    if (*ks_in) ks_opts.input = ks_input;
    if (*ks_gen) ks_opts.generate_seed = ks_seed;
    ks_opts.mode = ks_mode == "exhaustive" ? csm::SearchMode::exhaustive : csm::SearchMode::backtracking;
    ks_opts.parity_shortcut = !ks_no_shortcut;
    code = csm::cmd_ks(ks_opts, io);
  } else if (*simulate) {
    if (*sim_seed_opt) sim_opts.seed = sim_seed;
    if (*sim_shots_opt) sim_opts.shots = sim_shots;
    code = csm::cmd_simulate(sim_opts, io);
  } else if (*bell) {
    code = csm::cmd_bell(bell_opts, io);
  } else if (*selftest) {
    code = csm::cmd_selftest(self_opts, io);
  }
  out->flush();
  return code;
}
