#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

#include "mkl/harness.hpp"
#include "mkl/io.hpp"
#include "mkl/operators.hpp"
#include "mkl/solver.hpp"
#include "mkl/svg.hpp"
#include "mkl/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitNoConverge = 3;

void check_keys(const json& j, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) throw mkl::invalid_input(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw mkl::invalid_input(where + ": unknown key '" + key + "'");
}

std::string resolve(const std::string& out_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(out_dir) / p).string();
}

mkl::KernelFamily parse_family(const std::string& name) {
  if (name == "gaussian") return mkl::KernelFamily::gaussian;
  if (name == "polynomial") return mkl::KernelFamily::polynomial;
  if (name == "linear") return mkl::KernelFamily::linear;
  if (name == "precomputed") return mkl::KernelFamily::precomputed;
  throw mkl::invalid_input("unknown kernel family '" + name + "'");
}

mkl::KernelSpec parse_kernel(const json& j, const std::string& cfg_dir) {
  check_keys(j, "kernel", {"family", "width", "degree", "offset", "coords", "scale", "csv"});
  mkl::KernelSpec spec;
  spec.family = parse_family(j.at("family").get<std::string>());
  if (j.count("width")) spec.width = j["width"].get<double>();
  if (j.count("degree")) spec.degree = j["degree"].get<int>();
  if (j.count("offset")) spec.offset = j["offset"].get<double>();
  if (j.count("scale")) spec.scale = j["scale"].get<double>();
  if (j.count("coords")) spec.coordinate_mask = j["coords"].get<std::vector<int>>();
  if (spec.family == mkl::KernelFamily::precomputed) {
    if (!j.count("csv"))
      throw mkl::invalid_input("precomputed kernel needs a 'csv' path");
    spec.precomputed = mkl::read_csv_matrix(resolve(cfg_dir, j["csv"].get<std::string>()));
  }
  return spec;
}

mkl::GeneratorConfig parse_generator(const json& j) {
  check_keys(j, "generator",
             {"M", "d", "beta", "c3", "family", "widths", "kernel_dim", "overlap",
              "noise_level", "n_train", "n_test", "anchors", "seed",
              "near_duplicate_last", "adversary_union_last", "duplicate_pair",
              "adversary_width_factor"});
  mkl::GeneratorConfig cfg;
  cfg.M = j.at("M").get<int>();
  if (j.count("d")) cfg.d = j["d"].get<int>();
  if (j.count("beta")) cfg.beta = j["beta"].get<double>();
  if (j.count("c3")) cfg.c3 = j["c3"].get<double>();
  if (j.count("family")) cfg.family = parse_family(j["family"].get<std::string>());
  if (j.count("widths")) cfg.widths = j["widths"].get<std::vector<double>>();
  if (j.count("kernel_dim")) cfg.kernel_dim = j["kernel_dim"].get<int>();
  if (j.count("overlap")) cfg.overlap = j["overlap"].get<double>();
  if (j.count("noise_level")) cfg.noise_level = j["noise_level"].get<double>();
  if (j.count("n_train")) cfg.n_train = j["n_train"].get<int>();
  if (j.count("n_test")) cfg.n_test = j["n_test"].get<int>();
  if (j.count("anchors")) cfg.anchors = j["anchors"].get<int>();
  if (j.count("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.count("near_duplicate_last")) cfg.near_duplicate_last = j["near_duplicate_last"].get<bool>();
  if (j.count("adversary_union_last"))
    cfg.adversary_union_last = j["adversary_union_last"].get<bool>();
  if (j.count("duplicate_pair")) cfg.duplicate_pair = j["duplicate_pair"].get<bool>();
  if (j.count("adversary_width_factor"))
    cfg.adversary_width_factor = j["adversary_width_factor"].get<double>();
  cfg.validate();
  return cfg;
}

mkl::ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "sparse_small_d") return mkl::ScheduleKind::sparse_small_d;
  if (name == "sparse_large_d") return mkl::ScheduleKind::sparse_large_d;
  if (name == "elastic1") return mkl::ScheduleKind::elastic1;
  if (name == "elastic2") return mkl::ScheduleKind::elastic2;
  if (name == "elastic3") return mkl::ScheduleKind::elastic3;
  if (name == "l1") return mkl::ScheduleKind::l1;
  if (name == "l2") return mkl::ScheduleKind::l2;
  throw mkl::invalid_input("unknown schedule kind '" + name + "'");
}

mkl::MethodSchedule parse_method_schedule(const json& j) {
  check_keys(j, "schedule", {"kind", "s", "t", "constants", "extras"});
  mkl::MethodSchedule ms;
  ms.kind = parse_schedule_kind(j.at("kind").get<std::string>());
  if (j.count("s")) ms.s = j["s"].get<double>();
  if (j.count("t")) ms.t = j["t"].get<double>();
  if (j.count("constants")) {
    const json& c = j["constants"];
    check_keys(c, "constants", {"K", "K2", "F"});
    if (c.count("K")) ms.constants.K = c["K"].get<double>();
    if (c.count("K2")) ms.constants.K2 = c["K2"].get<double>();
    if (c.count("F")) ms.constants.F = c["F"].get<double>();
  }
  if (j.count("extras")) {
    const json& e = j["extras"];
    check_keys(e, "extras", {"d", "beta", "b", "tau"});
    if (e.count("d")) ms.extras.d = e["d"].get<long>();
    if (e.count("beta")) ms.extras.beta = e["beta"].get<double>();
    if (e.count("b")) ms.extras.b = e["b"].get<double>();
    if (e.count("tau")) ms.extras.tau = e["tau"].get<double>();
  }
  return ms;
}

json load_config(const std::string& path) {
  const std::string text = mkl::read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw mkl::invalid_input(std::string("config parse error: ") + e.what());
  }
}

int cmd_fit(const json& cfg, const std::string& cfg_dir, const std::string& out_dir) {
  check_keys(cfg, "fit config",
             {"y_csv", "xs_csv", "kernels", "penalty", "allow_unpenalized", "max_iter",
              "tol", "model_out"});
  mkl::MklProblem problem;
  problem.y = mkl::read_csv_vector(resolve(cfg_dir, cfg.at("y_csv").get<std::string>()));
  if (cfg.count("xs_csv"))
    problem.xs = mkl::read_csv_matrix(resolve(cfg_dir, cfg["xs_csv"].get<std::string>()));
  else
    problem.xs = mkl::Mat::Zero(problem.y.size(), 0);

  for (const auto& kj : cfg.at("kernels")) {
    mkl::KernelSpec spec = parse_kernel(kj, cfg_dir);
    if (spec.family != mkl::KernelFamily::precomputed && problem.xs.cols() == 0)
      throw mkl::invalid_input("fit config: evaluated kernels need xs_csv");
    spec.scale *= mkl::normalization_scale(spec, problem.xs);
    problem.blocks.push_back(mkl::gram(spec, problem.xs));
  }

  const json& pj = cfg.at("penalty");
  check_keys(pj, "penalty", {"lambda1", "lambda2"});
  mkl::RegPenalty penalty{pj.at("lambda1").get<double>(), pj.at("lambda2").get<double>()};

  mkl::FitOptions opts;
  if (cfg.count("allow_unpenalized")) opts.allow_unpenalized = cfg["allow_unpenalized"].get<bool>();
  if (cfg.count("max_iter")) opts.max_iter = cfg["max_iter"].get<int>();
  if (cfg.count("tol")) opts.tol = cfg["tol"].get<double>();

  mkl::MklModel model = mkl::fit(problem, penalty, opts);

  const std::string model_path = resolve(
      out_dir, cfg.count("model_out") ? cfg["model_out"].get<std::string>() : "model.json");
  mkl::write_model_json(model_path, model);
  std::printf("objective=%s active=%zu iterations=%d converged=%d model=%s\n",
              mkl::format_double(model.objective).c_str(), model.active_set.size(),
              model.iterations, model.converged ? 1 : 0, model_path.c_str());
  return model.converged ? kExitOk : kExitNoConverge;
}

int cmd_rates(const json& cfg, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override) {
  check_keys(cfg, "rates config",
             {"generator", "n_grid", "trials", "methods", "schedules",
              "predicted_slopes", "csv_out", "summary_out", "svg_out"});
  mkl::GeneratorConfig gen = parse_generator(cfg.at("generator"));
  if (seed_override) gen.seed = *seed_override;
  const auto n_grid = cfg.at("n_grid").get<std::vector<long>>();
  const int trials = cfg.at("trials").get<int>();
  const auto methods = cfg.at("methods").get<std::vector<std::string>>();

  mkl::RateOptions opts;
  for (const auto& [name, sj] : cfg.at("schedules").items())
    opts.schedules[name] = parse_method_schedule(sj);
  if (cfg.count("predicted_slopes"))
    for (const auto& [name, v] : cfg["predicted_slopes"].items())
      opts.predicted_slope[name] = v.get<double>();

  mkl::RateResult result = mkl::rate_experiment(gen, n_grid, methods, trials, opts);
  if (result.excluded > result.total / 10)
    std::fprintf(stderr, "warning: %d of %d fits excluded for non-convergence\n",
                 result.excluded, result.total);

  mkl::write_rate_csv(
      resolve(out_dir, cfg.count("csv_out") ? cfg["csv_out"].get<std::string>() : "rates.csv"),
      result);
  mkl::write_text_file(resolve(out_dir, cfg.count("summary_out")
                                            ? cfg["summary_out"].get<std::string>()
                                            : "rates_summary.json"),
                       mkl::rate_summary_json(result));
  mkl::write_text_file(
      resolve(out_dir, cfg.count("svg_out") ? cfg["svg_out"].get<std::string>() : "rates.svg"),
      mkl::rate_plot_svg(result));
  for (const auto& [method, slope] : result.fitted_slope)
    std::printf("%s: fitted_slope=%s\n", method.c_str(),
                mkl::format_double(slope).c_str());
  return kExitOk;
}

int cmd_support(const json& cfg, const std::string& out_dir,
                std::optional<std::uint64_t> seed_override) {
  check_keys(cfg, "support config",
             {"generator", "n_grid", "trials", "c1", "c2", "csv_out", "summary_out"});
  mkl::GeneratorConfig gen = parse_generator(cfg.at("generator"));
  if (seed_override) gen.seed = *seed_override;
  const auto n_grid = cfg.at("n_grid").get<std::vector<long>>();
  const int trials = cfg.at("trials").get<int>();
  mkl::SupportOptions opts;
  if (cfg.count("c1")) opts.c1 = cfg["c1"].get<double>();
  if (cfg.count("c2")) opts.c2 = cfg["c2"].get<double>();

  mkl::SupportResult result = mkl::support_experiment(gen, n_grid, trials, opts);
  mkl::write_support_csv(
      resolve(out_dir,
              cfg.count("csv_out") ? cfg["csv_out"].get<std::string>() : "support.csv"),
      result);
  mkl::write_text_file(resolve(out_dir, cfg.count("summary_out")
                                            ? cfg["summary_out"].get<std::string>()
                                            : "support_summary.json"),
                       mkl::support_summary_json(result));
  for (std::size_t i = 0; i < result.grid.size(); ++i)
    std::printf("n=%ld recovery=%s\n", result.grid[i],
                mkl::format_double(result.recovery_frequency[i]).c_str());
  return kExitOk;
}

int cmd_diag(const json& cfg, const std::string& out_dir,
             std::optional<std::uint64_t> seed_override) {
  check_keys(cfg, "diag config", {"generator", "penalty", "l1_variant", "out"});
  mkl::GeneratorConfig gen = parse_generator(cfg.at("generator"));
  if (seed_override) gen.seed = *seed_override;
  const json& pj = cfg.at("penalty");
  check_keys(pj, "penalty", {"lambda1", "lambda2"});
  mkl::RegPenalty penalty{pj.at("lambda1").get<double>(), pj.at("lambda2").get<double>()};
  const bool l1_variant = cfg.count("l1_variant") && cfg["l1_variant"].get<bool>();

  mkl::SyntheticProblem sp = mkl::gen_problem(gen);
  mkl::IncoherenceReport inc = mkl::incoherence_report(sp.problem.blocks, sp.true_active);

  json out;
  out["kappa_min"] = inc.kappa_min;
  out["rho"] = inc.rho;
  out["scores"] = json::object();
  out["condition_elastic_ok"] = true;
  if (sp.true_active.size() < sp.problem.blocks.size()) {
    mkl::IrrepresentableScore sc =
        mkl::irrepresentable_score(sp.problem, sp.true_active, penalty, l1_variant);
    for (const auto& [m, v] : sc.per_inactive) out["scores"][std::to_string(m)] = v;
    out["condition_elastic_ok"] = sc.condition_elastic_ok;
    if (sc.condition_l1) {
      out["l1_scores"] = json::object();
      for (const auto& [m, v] : *sc.condition_l1) out["l1_scores"][std::to_string(m)] = v;
    }
  }
  const std::string text = out.dump(2) + "\n";
  std::fputs(text.c_str(), stdout);
  if (cfg.count("out")) mkl::write_text_file(resolve(out_dir, cfg["out"].get<std::string>()), text);
  return kExitOk;
}

json theory_report_json(const mkl::TheoryParams& params) {
  mkl::RegimeReport rep = mkl::rate_exponents(params);
  json out;
  out["params"] = {{"beta", params.beta}, {"b", params.b}, {"s", params.s}, {"tau", params.tau}};
  if (params.d) out["params"]["d"] = *params.d;
  if (params.n) out["params"]["n"] = params.n;
  if (params.M) out["params"]["M"] = params.M;
  out["thresholds"] = {{"tau1", rep.taus.tau1}, {"tau2", rep.taus.tau2},
                       {"tau3", rep.taus.tau3}, {"tau4", rep.taus.tau4},
                       {"tau5", rep.taus.tau5}, {"tau6", rep.taus.tau6}};
  out["gammas"] = {{"gamma1", rep.gamma1}, {"gamma2", rep.gamma2}, {"gamma3", rep.gamma3},
                   {"gamma4", rep.gamma4}, {"gamma5", rep.gamma5}};
  out["admissible"] = rep.admissible;
  out["regime"] = mkl::regime_name(rep.regime);
  out["predicted_exponent"] = json::object();
  if (std::isfinite(rep.elastic_exponent))
    out["predicted_exponent"]["elastic"] = rep.elastic_exponent;
  out["predicted_exponent"]["l1"] = rep.l1_exponent;
  out["predicted_exponent"]["l2"] = rep.l2_exponent;
  out["l1_hypothesis_met"] = rep.l1_hypothesis_met;
  out["l2_hypothesis_met"] = rep.l2_hypothesis_met;
  return out;
}

int cmd_theory(const json& cfg, const std::string& out_dir) {
  check_keys(cfg, "theory config", {"beta", "b", "s", "tau", "n", "d", "M", "out"});
  mkl::TheoryParams params;
  params.beta = cfg.at("beta").get<double>();
  params.b = cfg.at("b").get<double>();
  params.s = cfg.at("s").get<double>();
  params.tau = cfg.at("tau").get<double>();
  if (cfg.count("d")) params.d = cfg["d"].get<long>();
  if (cfg.count("n")) params.n = cfg["n"].get<long>();
  if (cfg.count("M")) params.M = cfg["M"].get<long>();
  const std::string text = theory_report_json(params).dump(2) + "\n";
  std::fputs(text.c_str(), stdout);
  if (cfg.count("out")) mkl::write_text_file(resolve(out_dir, cfg["out"].get<std::string>()), text);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"elastic-net multiple kernel learning toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  std::optional<std::uint64_t> seed_override;
  std::uint64_t seed_value = 0;
  std::vector<CLI::Option*> seed_opts;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* copt = sub->add_option("--config", config_path, "JSON config path");
    if (config_required) copt->required();
    sub->add_option("--out", out_dir, "output directory");
    seed_opts.push_back(sub->add_option("--seed", seed_value, "override the generator seed"));
  };

  auto* fit_cmd = app.add_subcommand("fit", "fit one problem from CSV inputs");
  add_common(fit_cmd, true);
  auto* rates_cmd = app.add_subcommand("rates", "convergence-rate slope experiment");
  add_common(rates_cmd, true);
  auto* support_cmd = app.add_subcommand("support", "support-recovery experiment");
  add_common(support_cmd, true);
  auto* diag_cmd = app.add_subcommand("diag", "incoherence and irrepresentable diagnostics");
  add_common(diag_cmd, true);

  auto* theory_cmd = app.add_subcommand("theory", "thresholds, exponents, and regime");
  add_common(theory_cmd, false);
  double th_beta = 0, th_b = 0, th_s = 0, th_tau = 0;
  long th_n = 0, th_d = 0, th_M = 0;
  auto* o_beta = theory_cmd->add_option("--beta", th_beta);
  auto* o_b = theory_cmd->add_option("--b", th_b);
  auto* o_s = theory_cmd->add_option("--s", th_s);
  auto* o_tau = theory_cmd->add_option("--tau", th_tau);
  auto* o_n = theory_cmd->add_option("--n", th_n);
  auto* o_d = theory_cmd->add_option("--d", th_d);
  auto* o_M = theory_cmd->add_option("--M", th_M);

  CLI11_PARSE(app, argc, argv);

  for (const CLI::Option* opt : seed_opts)
    if (opt->count()) seed_override = seed_value;

  try {
    if (fit_cmd->parsed() || rates_cmd->parsed() || support_cmd->parsed() ||
        diag_cmd->parsed()) {
      const json cfg = load_config(config_path);
      const std::string cfg_dir = fs::path(config_path).parent_path().string().empty()
                                      ? "."
                                      : fs::path(config_path).parent_path().string();
      if (fit_cmd->parsed()) return cmd_fit(cfg, cfg_dir, out_dir);
      if (rates_cmd->parsed()) return cmd_rates(cfg, out_dir, seed_override);
      if (support_cmd->parsed()) return cmd_support(cfg, out_dir, seed_override);
      return cmd_diag(cfg, out_dir, seed_override);
    }
    // theory: either a config file or direct flags
    if (!config_path.empty()) {
      return cmd_theory(load_config(config_path), out_dir);
    }
    if (!(o_beta->count() && o_b->count() && o_s->count() && o_tau->count()))
      throw mkl::invalid_input("theory: pass --config or all of --beta --b --s --tau");
    json cfg;
    cfg["beta"] = th_beta;
    cfg["b"] = th_b;
    cfg["s"] = th_s;
    cfg["tau"] = th_tau;
    if (o_n->count()) cfg["n"] = th_n;
    if (o_d->count()) cfg["d"] = th_d;
    if (o_M->count()) cfg["M"] = th_M;
    return cmd_theory(cfg, out_dir);
  } catch (const mkl::io_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
}
