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

#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "pbcore/aggregation.hpp"
#include "pbcore/coreverify.hpp"
#include "pbcore/error.hpp"
#include "pbcore/io.hpp"
#include "pbcore/lindahl.hpp"
#include "pbcore/mechanism.hpp"
#include "pbcore/model.hpp"
#include "pbcore/saturating.hpp"

namespace pbcore::app {
namespace {

namespace fs = std::filesystem;

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// Lookup order: command-line options, then the config section, then the
// fallback.
class Settings {
 public:
  Settings(const Json& options, const Json& section) : options_(options), section_(section) {}

  bool has(const char* key) const { return find(key) != nullptr; }

  template <class T>
  T get(const char* key, T fallback) const {
    const Json* v = find(key);
    if (!v) return fallback;
    try {
      return v->get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::kInvalidArgument, std::string("setting '") + key + "' has the wrong type");
    }
  }

  const Json* find(const char* key) const {
    for (const Json* obj : {&options_, &section_}) {
      if (obj->is_object() && obj->contains(key) && !(*obj)[key].is_null()) return &(*obj)[key];
    }
    return nullptr;
  }

 private:
  const Json& options_;
  const Json& section_;
};

const Json& empty_object() {
  static const Json e = Json::object();
  return e;
}

const Json& member(const Json& obj, const char* key) {
  if (obj.is_object() && obj.contains(key) && obj[key].is_object()) return obj[key];
  return empty_object();
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kParse, what + ": " + e.what());
  }
}

struct Election {
  std::string votes_path, config_path;
  std::string votes_hash, config_hash;
  Json config = Json::object();
  VoteMatrix votes;
  std::int64_t budget_cents = 0;
  std::optional<std::vector<std::int64_t>> size_cents;
  std::shared_ptr<const Instance> instance;
};

Election load_election(const Json& request) {
  Election e;
  e.votes_path = request.value("votes", std::string());
  e.config_path = request.value("config", std::string());
  require(!e.votes_path.empty(), ErrorCode::kInvalidArgument, "a votes file is required");
  require(!e.config_path.empty(), ErrorCode::kInvalidArgument, "a config file is required");
  const std::string votes_text = read_file(e.votes_path);
  const std::string config_text = read_file(e.config_path);
  e.votes_hash = sha256_hex(votes_text);
  e.config_hash = sha256_hex(config_text);
  e.votes = parse_votes(votes_text);
  e.config = parse_json(config_text, "config " + e.config_path);
  require(e.config.is_object(), ErrorCode::kParse, "config must be a JSON object");

  require(e.config.contains("budget") && e.config["budget"].is_number(), ErrorCode::kInvalidArgument,
          "config needs a numeric budget");
  e.budget_cents = to_cents(e.config["budget"].get<double>());
  require(e.budget_cents > 0, ErrorCode::kInvalidArgument, "budget must be positive");

  // Optional item list: names must match the vote columns, sizes are all or
  // nothing.
  if (e.config.contains("items")) {
    const Json& items = e.config["items"];
    require(items.is_array(), ErrorCode::kInvalidArgument, "config items must be an array");
    std::map<std::string, std::optional<std::int64_t>> by_name;
    for (const Json& it : items) {
      require(it.is_object() && it.contains("name") && it["name"].is_string(),
              ErrorCode::kInvalidArgument, "every config item needs a name");
      const std::string name = it["name"].get<std::string>();
      std::optional<std::int64_t> size;
      if (it.contains("size") && !it["size"].is_null()) {
        require(it["size"].is_number(), ErrorCode::kInvalidArgument,
                "size of '" + name + "' must be a number");
        size = to_cents(it["size"].get<double>());
        require(*size > 0, ErrorCode::kInvalidArgument, "size of '" + name + "' must be positive");
      }
      require(by_name.emplace(name, size).second, ErrorCode::kInvalidArgument,
              "item '" + name + "' is listed twice in the config");
    }
    for (const auto& name : e.votes.items) {
      if (!by_name.count(name)) fail(ErrorCode::kParse, "unknown item column '" + name + "'");
    }
    for (const auto& [name, size] : by_name) {
      (void)size;
      require(std::find(e.votes.items.begin(), e.votes.items.end(), name) != e.votes.items.end(),
              ErrorCode::kInvalidArgument, "config item '" + name + "' has no vote column");
    }
    std::size_t sized = 0;
    for (const auto& [name, size] : by_name) sized += size.has_value();
    require(sized == 0 || sized == by_name.size(), ErrorCode::kInvalidArgument,
            "give a size for every item or for none");
    if (sized > 0) {
      e.size_cents.emplace();
      for (const auto& name : e.votes.items) e.size_cents->push_back(*by_name[name]);
    }
  }

  std::optional<std::vector<double>> sizes;
  if (e.size_cents) {
    sizes.emplace();
    for (auto c : *e.size_cents) sizes->push_back(from_cents(c));
  }
  e.instance = std::make_shared<const Instance>(e.votes.voters(), e.votes.items.size(),
                                                from_cents(e.budget_cents), e.votes.cells, sizes,
                                                e.votes.items);
  return e;
}

std::string model_family(const Election& e, const char* fallback) {
  return member(e.config, "model").value("family", std::string(fallback));
}

UtilityModel build_model(const Election& e, const std::string& family) {
  const Json& m = member(e.config, "model");
  const auto& inst = e.instance;
  if (family == "linear") return UtilityModel::linear(inst);
  if (family == "cobb_douglas") return UtilityModel::cobb_douglas(inst);
  if (family == "saturating") return UtilityModel::saturating(inst);
  if (family == "smoothed_saturating") {
    require(m.contains("eps_smooth") && m["eps_smooth"].is_number(), ErrorCode::kInvalidArgument,
            "smoothed_saturating needs model.eps_smooth");
    return UtilityModel::smoothed_saturating(inst, m["eps_smooth"].get<double>());
  }
  if (family == "power_sum") {
    require(m.contains("alpha"), ErrorCode::kInvalidArgument, "power_sum needs model.alpha");
    std::vector<double> alpha;
    if (m["alpha"].is_number()) {
      alpha.assign(inst->items(), m["alpha"].get<double>());
    } else {
      require(m["alpha"].is_array(), ErrorCode::kInvalidArgument,
              "model.alpha must be a number or an array");
      for (const Json& a : m["alpha"]) {
        require(a.is_number(), ErrorCode::kInvalidArgument, "model.alpha entries must be numbers");
        alpha.push_back(a.get<double>());
      }
    }
    return UtilityModel::power_sum(inst, std::move(alpha));
  }
  fail(ErrorCode::kUnsupportedModel, "unknown utility family '" + family + "'");
}

std::uint64_t resolve_seed(const Json& request, const Json& config) {
  if (request.contains("seed") && !request["seed"].is_null()) return request["seed"].get<std::uint64_t>();
  if (config.contains("seed") && config["seed"].is_number_unsigned()) {
    return config["seed"].get<std::uint64_t>();
  }
  return 0;
}

fs::path resolve_out_dir(const Json& request) {
  std::string dir = request.value("out_dir", std::string());
  if (dir.empty()) {
    if (const char* env = std::getenv("PBCORE_OUT_DIR")) dir = env;
  }
  if (dir.empty()) dir = ".";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

Json allocation_json(const Instance& inst, std::span<const double> x) {
  Json items = Json::array();
  std::int64_t total = 0;
  for (std::size_t j = 0; j < inst.items(); ++j) {
    Json it;
    it["name"] = inst.item_names()[j];
    it["amount"] = x[j];
    const std::int64_t cents = to_cents(x[j]);
    it["amount_cents"] = cents;
    if (inst.has_sizes()) it["fraction_of_size"] = x[j] / inst.size(j);
    total += cents;
    items.push_back(std::move(it));
  }
  Json out;
  out["total_cents"] = total;
  out["items"] = std::move(items);
  return out;
}

std::vector<double> read_allocation(const std::string& path, const Instance& inst) {
  const std::string text = read_file(path);
  std::map<std::string, double> amounts;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const Json doc = parse_json(text, "allocation " + path);
    const Json& alloc = doc.contains("allocation") ? doc["allocation"] : doc;
    require(alloc.contains("items") && alloc["items"].is_array(), ErrorCode::kParse,
            "allocation JSON needs an items array");
    for (const Json& it : alloc["items"]) {
      require(it.contains("name"), ErrorCode::kParse, "allocation item without a name");
      double v;
      if (it.contains("amount")) {
        v = it["amount"].get<double>();
      } else {
        v = from_cents(it.at("amount_cents").get<std::int64_t>());
      }
      amounts[it["name"].get<std::string>()] = v;
    }
  } else {
    // Two-column CSV: item,amount.
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string::npos) end = text.size();
      std::string line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line_no == 1) continue;
      const auto comma = line.rfind(',');
      if (comma == std::string::npos) {
        fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected item,amount");
      }
      try {
        amounts[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
      } catch (const std::exception&) {
        fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ", column 2: not a number");
      }
    }
  }
  std::vector<double> x;
  for (const auto& name : inst.item_names()) {
    const auto it = amounts.find(name);
    require(it != amounts.end(), ErrorCode::kInvalidArgument,
            "allocation has no amount for item '" + name + "'");
    x.push_back(it->second);
  }
  require(amounts.size() == x.size(), ErrorCode::kInvalidArgument,
          "allocation names items missing from the votes");
  return x;
}

std::string trace_csv(const std::vector<TracePoint>& trace) {
  std::string out = "iteration,max_violation\n";
  for (const auto& t : trace) out += std::to_string(t.iteration) + "," + fmt("%.17g", t.max_abs_residual) + "\n";
  return out;
}

Json certificate_json(const CoreCertificate& c) {
  Json j;
  j["epsilon"] = c.epsilon;
  j["spend"] = c.spend;
  j["spend_bound"] = std::isfinite(c.spend_bound) ? Json(c.spend_bound) : Json();
  j["budget_slack"] = std::isfinite(c.budget_slack) ? Json(c.budget_slack) : Json();
  j["guarantee"] = c.guarantee;
  return j;
}

Json deviation_json(const std::optional<Deviation>& d, const Instance& inst) {
  Json j;
  j["found"] = d.has_value();
  if (d) {
    j["coalition"] = d->coalition;
    j["coalition_size"] = d->coalition.size();
    j["allocation"] = allocation_json(inst, d->y.x);
    j["min_gain"] = std::isfinite(d->min_gain) ? Json(d->min_gain) : Json("inf");
  }
  return j;
}

SolverConfig solver_config(const Settings& s, double budget, std::uint64_t seed) {
  SolverConfig c = SolverConfig::for_budget(budget);
  c.residual_tol = s.get("residual_tol", c.residual_tol);
  c.max_iters = s.get("max_iters", c.max_iters);
  c.seed = seed;
  return c;
}

HeuristicConfig heuristic_config(const Settings& s, std::uint64_t seed) {
  HeuristicConfig c;
  if (s.has("eps_target")) c.eps_target = s.get("eps_target", 0.0);
  if (s.has("perturb_alpha")) c.perturb_alpha = s.get("perturb_alpha", 0.0);
  c.max_sweeps = s.get("max_sweeps", c.max_sweeps);
  c.seed = seed;
  return c;
}

MechanismConfig mechanism_config(const Settings& s, std::uint64_t seed) {
  MechanismConfig c;
  c.gamma = s.get("gamma", c.gamma);
  c.epsilon_priv = s.get("epsilon_priv", c.epsilon_priv);
  c.chain_steps = s.get("chain_steps", c.chain_steps);
  c.burn_in = s.get("burn_in", c.burn_in);
  c.seed = seed;
  return c;
}

struct Context {
  const Json& request;
  const Json& options;
  fs::path out_dir;
  Json& report;
  std::vector<std::string>& artifacts;

  void emit(const std::string& name, const std::string& content) {
    const fs::path p = out_dir / name;
    write_file(p.string(), content);
    artifacts.push_back(p.string());
  }
};

void describe_inputs(Context& ctx, const Election& e, std::uint64_t seed) {
  Json inputs;
  inputs["votes"] = e.votes_path;
  inputs["votes_sha256"] = e.votes_hash;
  inputs["config"] = e.config_path;
  inputs["config_sha256"] = e.config_hash;
  ctx.report["seed"] = seed;
  ctx.report["inputs"] = std::move(inputs);
  ctx.report["config"] = e.config;
  Json inst;
  inst["agents"] = e.instance->agents();
  inst["items"] = e.instance->items();
  inst["budget_cents"] = e.budget_cents;
  inst["item_names"] = e.instance->item_names();
  if (e.size_cents) inst["size_cents"] = *e.size_cents;
  ctx.report["instance"] = std::move(inst);
}

// Core allocation for the ranking comparison: the saturating heuristic, or
// the equilibrium solver for the non-satiating families.
std::vector<double> core_allocation(const Election& e, const std::string& family,
                                    const Settings& solver, const Settings& heuristic,
                                    std::uint64_t seed, Json& info) {
  if (family == "saturating") {
    const auto h = heuristic_solve(*e.instance, heuristic_config(heuristic, seed));
    info["method"] = "saturating_heuristic";
    info["converged"] = h.converged;
    info["max_violation"] = h.max_violation;
    info["sweeps"] = h.sweeps;
    return h.x.x;
  }
  const auto model = build_model(e, family);
  const auto r = solve_potential(model, solver_config(solver, e.instance->budget(), seed));
  info["method"] = "lindahl_potential";
  info["converged"] = r.converged;
  info["iterations"] = r.iterations;
  return r.x.x;
}

void cmd_solve(Context& ctx) {
  const Election e = load_election(ctx.request);
  const std::uint64_t seed = resolve_seed(ctx.request, e.config);
  describe_inputs(ctx, e, seed);
  const std::string family = model_family(e, "linear");
  require(family != "saturating", ErrorCode::kUnsupportedModel,
          "saturating utilities are solved with solve-sat or via smoothed_saturating");
  const UtilityModel model = build_model(e, family);
  const Settings s(ctx.options, member(e.config, "solver"));
  const SolverConfig cfg = solver_config(s, e.instance->budget(), seed);
  const std::string method = s.get("method", std::string("auto"));

  LindahlResult r;
  if (method == "sgd") {
    SgdOptions o;
    o.rounds = s.get("rounds", o.rounds);
    o.step_scale = s.get("step_scale", o.step_scale);
    o.seed = seed;
    r = sgd_elicitation(model, o);
  } else if (method == "auto" || method == "potential") {
    r = solve_potential(model, cfg);
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown solve method '" + method + "'");
  }

  const double funded = 10.0 * cfg.z_floor;
  const auto residuals = lindahl_residuals(model, r.x.x);
  Json res;
  res["method"] = method;
  res["family"] = family;
  res["converged"] = r.converged;
  res["iterations"] = r.iterations;
  res["line_search_failed"] = r.line_search_failed;
  res["kkt_violation"] = kkt_violation(residuals, r.x.x, funded);
  res["residuals"] = residuals;
  if (!r.objective.empty()) res["objective"] = r.objective.back();
  ctx.report["allocation"] = allocation_json(*e.instance, r.x.x);
  ctx.report["solver"] = std::move(res);
  ctx.report["certificate"] = certificate_json(certify_from_residual(model, r.x.x, funded));

  const PriceVectors prices = recover_prices(model, r.x.x);
  double worst_spend = 0.0, worst_profit = 0.0;
  const double share = e.instance->budget() / static_cast<double>(e.instance->agents());
  for (std::size_t i = 0; i < prices.agents; ++i) {
    worst_spend = std::max(worst_spend, std::abs(prices.spend(i, r.x.x) - share) / share);
  }
  for (std::size_t j = 0; j < prices.items; ++j) {
    if (r.x.x[j] > funded) worst_profit = std::max(worst_profit, std::abs(prices.column_sum(j) - 1.0));
  }
  Json p;
  p["max_relative_spend_gap"] = worst_spend;
  p["max_funded_price_gap"] = worst_profit;
  ctx.report["prices"] = std::move(p);

  ctx.emit("solve_trace.csv", trace_csv(r.trace));
}

void cmd_solve_sat(Context& ctx) {
  const Election e = load_election(ctx.request);
  const std::uint64_t seed = resolve_seed(ctx.request, e.config);
  describe_inputs(ctx, e, seed);
  require(e.instance->has_sizes(), ErrorCode::kInvalidArgument,
          "saturating utilities need item sizes in the config");
  const Settings s(ctx.options, member(e.config, "heuristic"));
  const HeuristicResult h = heuristic_solve(*e.instance, heuristic_config(s, seed));
  Json res;
  res["converged"] = h.converged;
  res["sweeps"] = h.sweeps;
  res["max_violation"] = h.max_violation;
  res["budget_flag"] = h.budget_flag;
  res["marginal_values"] = h.y;
  ctx.report["allocation"] = allocation_json(*e.instance, h.x.x);
  ctx.report["heuristic"] = std::move(res);
  ctx.emit("solve_sat_trace.csv", trace_csv(h.trace));
}

void cmd_check_core(Context& ctx) {
  const Election e = load_election(ctx.request);
  const std::uint64_t seed = resolve_seed(ctx.request, e.config);
  describe_inputs(ctx, e, seed);
  const std::string path = ctx.request.value("allocation", std::string());
  require(!path.empty(), ErrorCode::kInvalidArgument, "check-core needs an allocation file");
  const std::vector<double> x = read_allocation(path, *e.instance);
  ctx.report["inputs"]["allocation"] = path;
  ctx.report["inputs"]["allocation_sha256"] = sha256_hex(read_file(path));
  ctx.report["allocation"] = allocation_json(*e.instance, x);

  const std::string family = model_family(e, "linear");
  const UtilityModel model = build_model(e, family);
  const Settings s(ctx.options, member(e.config, "core_check"));
  bool blocked = false;

  auto skipped = [](const Error& err) {
    Json j;
    j["status"] = "skipped";
    j["reason"] = err.what();
    return j;
  };

  if (model.non_satiating() || model.homogeneous()) {
    try {
      const double funded = s.get("funded_threshold", 1e-11 * e.instance->budget());
      ctx.report["certificate"] = certificate_json(certify_from_residual(model, x, funded));
    } catch (const Error& err) {
      ctx.report["certificate"] = skipped(err);
    }
  }

  ContinuousSearch search;
  search.grid_steps = s.get("grid_steps", search.grid_steps);
  search.threshold = s.get("threshold", search.threshold);
  search.budget_reduction = s.get("budget_reduction", search.budget_reduction);
  const std::string mode = s.get("mode", std::string("additive"));
  require(mode == "additive" || mode == "multiplicative", ErrorCode::kInvalidArgument,
          "core_check.mode must be additive or multiplicative");
  search.mode = mode == "additive" ? GainMode::kAdditive : GainMode::kMultiplicative;
  try {
    const auto d = find_deviation_continuous(model, x, search);
    Json j = deviation_json(d, *e.instance);
    j["status"] = "ran";
    j["mode"] = mode;
    j["threshold"] = search.threshold;
    j["grid_steps"] = search.grid_steps;
    blocked = blocked || d.has_value();
    ctx.report["continuous"] = std::move(j);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::kTooLarge) throw;
    ctx.report["continuous"] = skipped(err);
  }

  if (e.instance->has_sizes()) {
    const double eps = s.get("integral_eps", 0.0);
    try {
      const auto d = find_deviation_integral(*e.instance, x, eps);
      Json j = deviation_json(d, *e.instance);
      j["status"] = "ran";
      j["epsilon"] = eps;
      blocked = blocked || d.has_value();
      ctx.report["integral"] = std::move(j);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kTooLarge) throw;
      ctx.report["integral"] = skipped(err);
    }
  }
  ctx.report["deviation_found"] = blocked;
}

void cmd_mechanism(Context& ctx) {
  const Election e = load_election(ctx.request);
  const std::uint64_t seed = resolve_seed(ctx.request, e.config);
  describe_inputs(ctx, e, seed);
  const std::string family = model_family(e, "linear");
  require(family == "linear", ErrorCode::kUnsupportedModel,
          "the randomized mechanism is defined for linear utilities");
  const Settings s(ctx.options, member(e.config, "mechanism"));
  const MechanismConfig cfg = mechanism_config(s, seed);
  const Instance& inst = *e.instance;

  const MechanismSample sample = sample_mechanism(inst, cfg);
  const auto& d = sample.diagnostics;
  Json diag;
  diag["steps"] = d.steps;
  diag["burn_in"] = d.burn_in;
  diag["proposals"] = d.proposals;
  diag["max_proposals_in_step"] = d.max_proposals_in_step;
  diag["acceptance_rate"] = d.acceptance_rate;
  diag["mean_chord_length"] = d.mean_chord_length;
  ctx.report["allocation"] = allocation_json(inst, sample.x.x);
  ctx.report["diagnostics"] = std::move(diag);

  const std::size_t n = inst.agents(), k = inst.items();
  Json score;
  score["q"] = score_q(inst, sample.x.x, cfg.gamma);
  score["q_max"] = static_cast<double>(n) - std::pow(static_cast<double>(n), 1.0 - cfg.gamma);
  score["inner_max"] = inner_max(inst, sample.x.x, cfg.gamma).value;
  score["additive_core_bound"] = approximation_certificate(inst, sample.x.x, cfg.gamma);
  const bool pre = high_probability_precondition(n, k, cfg.epsilon_priv);
  score["high_probability_precondition"] = pre;
  score["high_probability_bound"] = high_probability_bound(n, k, cfg.gamma, cfg.epsilon_priv);
  ctx.report["score"] = std::move(score);

  if (ctx.options.contains("manipulate_agent")) {
    const auto agent = ctx.options["manipulate_agent"].get<std::size_t>();
    require(ctx.options.contains("misreport") && ctx.options["misreport"].is_array(),
            ErrorCode::kInvalidArgument, "manipulation needs a misreport vector");
    std::vector<double> lie = ctx.options["misreport"].get<std::vector<double>>();
    double total = 0.0;
    for (double v : lie) {
      require(v >= 0.0, ErrorCode::kInvalidArgument, "misreport entries must be nonnegative");
      total += v;
    }
    require(total > 0.0, ErrorCode::kInvalidArgument, "misreport must have positive total");
    for (double& v : lie) v /= total;
    const std::size_t trials = ctx.options.value("trials", std::size_t{8});
    const auto est = manipulation_gain(inst, agent, lie, cfg, trials);
    Json m;
    m["agent"] = agent;
    m["misreport"] = lie;
    m["trials"] = est.trials;
    m["gain"] = est.gain;
    m["std_error"] = est.std_error;
    m["truthful_utility"] = est.truthful_utility;
    m["bound"] = std::expm1(2.0 * cfg.epsilon_priv);
    ctx.report["manipulation"] = std::move(m);
  }
}

void cmd_compare(Context& ctx) {
  const Election e = load_election(ctx.request);
  const std::uint64_t seed = resolve_seed(ctx.request, e.config);
  describe_inputs(ctx, e, seed);
  require(e.instance->has_sizes(), ErrorCode::kInvalidArgument, "compare needs item sizes");
  const std::string family = model_family(e, "saturating");
  const Settings solver(ctx.options, member(e.config, "solver"));
  const Settings heuristic(ctx.options, member(e.config, "heuristic"));
  Json info;
  const auto x = core_allocation(e, family, solver, heuristic, seed, info);
  const Allocation core_alloc{x, AllocationKind::kFractional};
  const RankedScheme core = rank_and_round(*e.instance, Scheme::kCore, core_alloc);
  const RankedScheme welfare = rank_and_round(*e.instance, Scheme::kWelfare);
  const SimilarityReport sim = compare_schemes(core, welfare, e.instance->budget());

  const Instance& inst = *e.instance;
  auto scheme_json = [&](const RankedScheme& r) {
    Json j;
    std::vector<std::string> order, funded;
    for (std::size_t idx : r.order) order.push_back(inst.item_names()[idx]);
    for (std::size_t j2 = 0; j2 < inst.items(); ++j2) {
      if (r.integral.x[j2] > 0.0) funded.push_back(inst.item_names()[j2]);
    }
    j["order"] = order;
    j["integral"] = funded;
    j["fractional"] = allocation_json(inst, r.fractional.x);
    return j;
  };
  ctx.report["core_solver"] = std::move(info);
  ctx.report["core"] = scheme_json(core);
  ctx.report["welfare"] = scheme_json(welfare);
  Json s;
  s["jaccard"] = sim.jaccard;
  s["budget_similarity"] = sim.budget_similarity;
  ctx.report["similarity"] = std::move(s);

  std::string csv = "Project,Budget,Votes,Core,Welfare\n";
  for (std::size_t j = 0; j < inst.items(); ++j) {
    std::string name = inst.item_names()[j];
    if (name.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char c : name) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      name = q + "\"";
    }
    csv += name + "," + fmt("%.2f", inst.size(j)) + "," + std::to_string(inst.votes(j)) + "," +
           fmt("%.2f", core.fractional.x[j] / inst.size(j)) + "," +
           fmt("%.2f", welfare.fractional.x[j] / inst.size(j)) + "\n";
  }
  ctx.emit("compare.csv", csv);
}

void cmd_analyze(Context& ctx) {
  const Election e = load_election(ctx.request);
  const std::uint64_t seed = resolve_seed(ctx.request, e.config);
  describe_inputs(ctx, e, seed);
  const Settings s(ctx.options, member(e.config, "analysis"));
  IndependenceConfig cfg;
  cfg.dof = s.get("dof", cfg.dof);
  cfg.alpha = s.get("alpha", cfg.alpha);
  cfg.min_voters = s.get("min_voters", cfg.min_voters);
  const IndependenceReport r = chi2_pairwise(*e.instance, cfg);
  const auto& names = e.instance->item_names();
  const std::size_t k = r.items;

  Json p = Json::array();
  for (std::size_t a = 0; a < k; ++a) {
    Json row = Json::array();
    for (std::size_t b = 0; b < k; ++b) {
      const double v = r.p(a, b);
      row.push_back(std::isnan(v) ? Json() : Json(v));
    }
    p.push_back(std::move(row));
  }
  Json pairs = Json::array();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      if (r.is_correlated(a, b)) pairs.push_back(Json::array({names[a], names[b]}));
    }
  }
  std::vector<std::string> leaves, constant;
  for (auto j : r.clustered) leaves.push_back(names[j]);
  for (auto j : r.constant_items) constant.push_back(names[j]);
  Json out;
  out["dof"] = cfg.dof;
  out["alpha"] = cfg.alpha;
  out["p_values"] = std::move(p);
  out["correlated_pairs"] = std::move(pairs);
  out["constant_items"] = constant;
  out["leaves"] = leaves;
  out["small_sample"] = r.small_sample;
  out["warnings"] = r.warnings;
  Json merges = Json::array();
  std::string csv = "cluster_a,cluster_b,height,size\n";
  for (const auto& m : r.dendrogram) {
    merges.push_back({{"a", m.a}, {"b", m.b}, {"height", m.height}, {"size", m.size}});
    csv += std::to_string(m.a) + "," + std::to_string(m.b) + "," + fmt("%.17g", m.height) + "," +
           std::to_string(m.size) + "\n";
  }
  out["dendrogram"] = std::move(merges);
  ctx.report["independence"] = std::move(out);
  ctx.emit("dendrogram.csv", csv);
}

void cmd_gen(Context& ctx) {
  const Settings s(ctx.options, empty_object());
  SyntheticParams params;
  params.profile = s.get("profile", std::string());
  require(!params.profile.empty(), ErrorCode::kInvalidArgument, "gen needs a profile");
  params.agents = s.get("n", params.agents);
  params.items = s.get("k", params.items);
  params.p = s.get("p", params.p);
  params.seed = resolve_seed(ctx.request, empty_object());
  const SyntheticElection g = gen_synthetic(params);

  const std::string votes = format_votes(g.votes);
  Json config;
  config["budget"] = from_cents(g.budget_cents);
  Json items = Json::array();
  for (std::size_t j = 0; j < g.votes.items.size(); ++j) {
    items.push_back({{"name", g.votes.items[j]}, {"size", from_cents(g.size_cents[j])}});
  }
  config["items"] = std::move(items);
  config["model"] = {{"family", g.family}};
  config["seed"] = params.seed;
  const std::string config_text = config.dump(2) + "\n";
  ctx.emit("votes.csv", votes);
  ctx.emit("config.json", config_text);

  Json gen;
  gen["profile"] = params.profile;
  gen["agents"] = g.votes.voters();
  gen["items"] = g.votes.items.size();
  gen["p"] = params.p;
  gen["votes_sha256"] = sha256_hex(votes);
  gen["config_sha256"] = sha256_hex(config_text);
  ctx.report["seed"] = params.seed;
  ctx.report["generated"] = std::move(gen);
}

using Handler = void (*)(Context&);

const std::vector<std::pair<std::string, Handler>>& handlers() {
  static const std::vector<std::pair<std::string, Handler>> table = {
      {"solve", cmd_solve},         {"solve-sat", cmd_solve_sat}, {"check-core", cmd_check_core},
      {"mechanism", cmd_mechanism}, {"compare", cmd_compare},     {"analyze", cmd_analyze},
      {"gen", cmd_gen}};
  return table;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : handlers()) v.push_back(name);
    return v;
  }();
  return names;
}

Outcome run_command(const Json& request) {
  require(request.is_object(), ErrorCode::kInvalidArgument, "request must be a JSON object");
  const std::string command = request.value("command", std::string());
  Handler handler = nullptr;
  for (const auto& [name, fn] : handlers()) {
    if (name == command) handler = fn;
  }
  require(handler != nullptr, ErrorCode::kInvalidArgument, "unknown command '" + command + "'");

  Outcome out;
  out.report["tool"] = "pbcore";
  out.report["version"] = kToolVersion;
  out.report["command"] = command;
  const Json& options = member(request, "options");
  Context ctx{request, options, resolve_out_dir(request), out.report, out.artifacts};

  const auto start = std::chrono::steady_clock::now();
  try {
    handler(ctx);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("bad JSON value: ") + e.what());
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::string report_name = command + "_report.json";
  out.artifacts.push_back((ctx.out_dir / report_name).string());
  out.report["artifacts"] = out.artifacts;
  out.report["timing"] = {{"wall_seconds", seconds}};
  write_file(out.artifacts.back(), out.report.dump(2) + "\n");
  return out;
}

}  // namespace pbcore::app
