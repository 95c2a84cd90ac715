// Copyright 2026 The pbcore Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Builds a JSON request from the flags and hands it
// to the shared library; the report goes to stdout, errors go to stdout as
// JSON with a nonzero exit status.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pbcore/pbcore.h"

namespace {

using Json = nlohmann::ordered_json;

int report_error(int status, const std::string& kind, const std::string& message) {
  Json err;
  err["error"] = {{"status", kind}, {"code", status}, {"message", message}};
  std::cout << err.dump(2) << "\n";
  return status == 0 ? 1 : status;
}

template <class T>
void put(Json& obj, const char* key, const std::optional<T>& v) {
  if (v) obj[key] = *v;
}

struct Common {
  std::string votes, config, out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c, bool inputs) {
  if (inputs) {
    cmd->add_option("--votes", c.votes, "vote matrix CSV (voter_id, item columns)")->required();
    cmd->add_option("--config", c.config, "election config JSON")->required();
  }
  cmd->add_option("--out", c.out, "output directory (default $PBCORE_OUT_DIR or .)");
  cmd->add_option("--seed", c.seed, "random seed; overrides the config");
  cmd->add_flag("--quiet", c.quiet, "do not print the report");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Core-based participatory budgeting: solve, verify and compare allocations"};
  app.set_version_flag("--version", std::string(pb_version()));
  app.require_subcommand(1);
  Common common;
  Json options = Json::object();

  // solve
  std::optional<std::string> method;
  std::optional<double> residual_tol;
  std::optional<std::size_t> max_iters, rounds;
  auto* solve = app.add_subcommand("solve", "Lindahl equilibrium for non-satiating utilities");
  add_common(solve, common, true);
  solve->add_option("--method", method, "potential (default) or sgd")
      ->check(CLI::IsMember({"auto", "potential", "sgd"}));
  solve->add_option("--residual-tol", residual_tol, "stopping tolerance on residuals");
  solve->add_option("--max-iters", max_iters, "iteration cap");
  solve->add_option("--rounds", rounds, "rounds for the sgd method");

  // solve-sat
  std::optional<double> eps_target, perturb_alpha;
  std::optional<std::size_t> max_sweeps;
  auto* solve_sat = app.add_subcommand("solve-sat", "Heuristic equilibrium for saturating utilities");
  add_common(solve_sat, common, true);
  solve_sat->add_option("--eps-target", eps_target, "target violation (default 1/n)");
  solve_sat->add_option("--perturb-alpha", perturb_alpha, "utility perturbation (default 1/k^2)");
  solve_sat->add_option("--max-sweeps", max_sweeps, "sweep cap");

  // check-core
  std::string allocation;
  std::optional<std::size_t> grid_steps;
  std::optional<double> threshold, integral_eps;
  std::optional<std::string> mode;
  auto* check = app.add_subcommand("check-core", "Search for coalitions that block an allocation");
  add_common(check, common, true);
  check->add_option("--allocation", allocation, "report JSON or item,amount CSV")->required();
  check->add_option("--grid-steps", grid_steps, "grid points per coalition budget");
  check->add_option("--threshold", threshold, "minimum gain for a deviation");
  check->add_option("--mode", mode, "additive or multiplicative")
      ->check(CLI::IsMember({"additive", "multiplicative"}));
  check->add_option("--integral-eps", integral_eps, "multiplicative slack for integral deviations");

  // mechanism
  std::optional<double> gamma, epsilon_priv;
  std::optional<std::size_t> chain_steps, burn_in, agent, trials;
  std::vector<double> misreport;
  auto* mech = app.add_subcommand("mechanism", "Sample the randomized truthful mechanism");
  add_common(mech, common, true);
  mech->add_option("--gamma", gamma, "lower bound exponent, L = n^-gamma");
  mech->add_option("--epsilon-priv", epsilon_priv, "exponential mechanism parameter");
  mech->add_option("--chain-steps", chain_steps, "hit-and-run steps");
  mech->add_option("--burn-in", burn_in, "steps discarded before sampling");
  auto* agent_opt = mech->add_option("--manipulate-agent", agent, "agent whose misreport is scored");
  mech->add_option("--misreport", misreport, "reported utility row")->needs(agent_opt)->delimiter(',');
  mech->add_option("--trials", trials, "paired chains per estimate");

  // compare
  auto* compare = app.add_subcommand("compare", "Rank and round Core against Welfare");
  add_common(compare, common, true);

  // analyze
  std::optional<double> dof, alpha;
  std::optional<std::size_t> min_voters;
  auto* analyze = app.add_subcommand("analyze", "Pairwise independence of item votes");
  add_common(analyze, common, true);
  analyze->add_option("--dof", dof, "degrees of freedom for the chi-square test");
  analyze->add_option("--alpha", alpha, "significance level");
  analyze->add_option("--min-voters", min_voters, "below this the sample is flagged small");

  // gen
  std::string profile;
  std::optional<std::size_t> n, k;
  std::optional<double> p;
  auto* gen = app.add_subcommand("gen", "Write a synthetic election");
  add_common(gen, common, false);
  gen->add_option("--profile", profile, "synthetic profile")->required();
  gen->add_option("--n", n, "number of voters");
  gen->add_option("--k", k, "number of items");
  gen->add_option("--p", p, "approval probability");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(PB_INVALID_ARGUMENT, "usage", e.what());
  }

  put(options, "method", method);
  put(options, "residual_tol", residual_tol);
  put(options, "max_iters", max_iters);
  put(options, "rounds", rounds);
  put(options, "eps_target", eps_target);
  put(options, "perturb_alpha", perturb_alpha);
  put(options, "max_sweeps", max_sweeps);
  put(options, "grid_steps", grid_steps);
  put(options, "threshold", threshold);
  put(options, "mode", mode);
  put(options, "integral_eps", integral_eps);
  put(options, "gamma", gamma);
  put(options, "epsilon_priv", epsilon_priv);
  put(options, "chain_steps", chain_steps);
  put(options, "burn_in", burn_in);
  put(options, "manipulate_agent", agent);
  put(options, "trials", trials);
  if (!misreport.empty()) options["misreport"] = misreport;
  put(options, "dof", dof);
  put(options, "alpha", alpha);
  put(options, "min_voters", min_voters);
  if (!profile.empty()) options["profile"] = profile;
  put(options, "n", n);
  put(options, "k", k);
  put(options, "p", p);

  Json request;
  request["command"] = app.get_subcommands().front()->get_name();
  if (!common.votes.empty()) request["votes"] = common.votes;
  if (!common.config.empty()) request["config"] = common.config;
  if (!common.out.empty()) request["out_dir"] = common.out;
  if (!allocation.empty()) request["allocation"] = allocation;
  put(request, "seed", common.seed);
  request["options"] = options;

  pb_result* result = nullptr;
  const pb_status status = pb_run(request.dump().c_str(), &result);
  if (status != PB_OK) return report_error(status, pb_status_name(status), pb_last_error());
  if (!common.quiet) std::cout << pb_result_json(result) << "\n";
  pb_result_free(result);
  return 0;
}
