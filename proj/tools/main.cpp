#include "istab/json_io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using istab::io::json;

// exit codes: 0 pass / none found / success, 1 violation or counterexample,
// 2 usage, config, or runtime error
constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kError = 2;

struct CommonOpts {
  std::string system_path;
  std::string certificate_path;
  std::vector<double> domain; // lo hi, applied per axis
  int samples = 10000;
  std::uint64_t seed = 0;
  std::string out_path;
};

istab::sys::Box uniform_box(const std::vector<double>& domain, int n) {
  if (domain.size() != 2 || domain[0] > domain[1])
    throw istab::io::IoError("--domain expects two values lo hi with lo <= hi");
  istab::sys::Box box;
  box.lo.assign(n, domain[0]);
  box.hi.assign(n, domain[1]);
  return box;
}

void write_report(const std::string& path, const json& report,
                  std::uint64_t seed) {
  std::string text = report.dump(2) + "\n";
  if (path.empty()) {
    std::cout << text;
    return;
  }
  istab::io::write_text_file(path, text);
  // wall-clock metadata lives next to the report so the report itself stays
  // byte-identical across reruns
  auto now = std::chrono::system_clock::now().time_since_epoch();
  json meta = {{"written_unix_ms",
                std::chrono::duration_cast<std::chrono::milliseconds>(now).count()},
               {"seed", seed}};
  istab::io::write_text_file(path + ".meta.json", meta.dump(2) + "\n");
}

int run_check(const CommonOpts& opts, const std::string& mode,
              const std::string& iss_mode, const std::string& phi_path) {
  istab::sys::ControlSystem system = istab::io::load_system(opts.system_path);
  json cert_json = istab::io::load_json(opts.certificate_path);
  istab::sys::Box domain = uniform_box(opts.domain, system.n);
  istab::cert::SamplerSpec sampler{opts.samples, opts.seed};

  json report = json::array();
  bool all_pass = true;
  auto add = [&](const istab::cert::CheckReport& r) {
    report.push_back(istab::io::to_json(r));
    all_pass = all_pass && r.pass;
  };

  if (mode == "gas" || mode == "iss") {
    auto gas = istab::io::gas_certificate_from_json(cert_json, system.n);
    istab::cert::gradient_crosscheck(gas.V, istab::expr::Dims{system.n, 0}, domain,
                                     100, istab::derive_seed(opts.seed, 1000));
    add(istab::cert::check_sandwich(gas, domain, sampler));
    add(istab::cert::check_decrease_gas(gas, system, domain, sampler));
    if (mode == "iss") {
      auto iss = istab::io::iss_certificate_from_json(cert_json, system.n);
      std::optional<istab::cmp::KInfFn> phi;
      auto m = istab::cert::IssMode::Sum;
      if (iss_mode == "implication") {
        m = istab::cert::IssMode::Implication;
        if (phi_path.empty())
          throw istab::io::IoError("--phi is required for implication mode");
        phi = istab::io::k_from_json(istab::io::load_json(phi_path));
      }
      add(istab::cert::check_decrease_iss(iss, system, domain, sampler, m, phi));
    }
  } else if (mode == "ugas") {
    auto ugas = istab::io::ugas_certificate_from_json(cert_json, system.n);
    add(istab::cert::check_ugas(ugas, system, domain, sampler));
  } else {
    throw istab::io::IoError("--mode must be gas, iss, or ugas");
  }

  write_report(opts.out_path, json{{"checks", report}, {"seed", opts.seed}},
               opts.seed);
  return all_pass ? kOk : kViolation;
}

int run_falsify(const CommonOpts& opts, const std::string& mode,
                const std::string& condition, int refinement) {
  istab::sys::ControlSystem system = istab::io::load_system(opts.system_path);
  json cert_json = istab::io::load_json(opts.certificate_path);
  istab::sys::Box domain = uniform_box(opts.domain, system.n);

  istab::cert::FalsifyProblem problem;
  problem.system = &system;
  problem.domain = domain;
  if (mode == "gas") {
    problem.gas = istab::io::gas_certificate_from_json(cert_json, system.n);
    problem.condition = condition == "sandwich"
                            ? istab::cert::Condition::Sandwich
                            : istab::cert::Condition::DecreaseGas;
  } else if (mode == "iss") {
    problem.iss = istab::io::iss_certificate_from_json(cert_json, system.n);
    problem.condition = istab::cert::Condition::DecreaseIssSum;
  } else if (mode == "ugas") {
    problem.ugas = istab::io::ugas_certificate_from_json(cert_json, system.n);
    problem.condition = istab::cert::Condition::Ugas;
  } else {
    throw istab::io::IoError("--mode must be gas, iss, or ugas");
  }

  istab::cert::FalsifyBudget budget{opts.samples, refinement};
  auto counterexample = istab::cert::falsify(problem, budget, opts.seed);
  json report = {{"seed", opts.seed},
                 {"found", counterexample.has_value()}};
  if (counterexample) report["counterexample"] = istab::io::to_json(*counterexample);
  write_report(opts.out_path, report, opts.seed);
  return counterexample ? kViolation : kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"incremental-stability certificate toolbox"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string mode = "gas";
  std::string iss_mode = "sum";
  std::string phi_path;
  int refinement = 200;

  auto* check = app.add_subcommand("check", "check certificate conditions by sampling");
  check->add_option("--system", opts.system_path)->required();
  check->add_option("--certificate", opts.certificate_path)->required();
  check->add_option("--mode", mode, "gas | iss | ugas");
  check->add_option("--domain", opts.domain, "domain box: lo hi per axis")
      ->expected(2);
  check->add_option("--samples", opts.samples);
  check->add_option("--seed", opts.seed);
  check->add_option("--iss-mode", iss_mode, "sum | implication");
  check->add_option("--phi", phi_path, "phi JSON for implication mode");
  check->add_option("--out", opts.out_path, "report JSON path (stdout if omitted)");

  auto* falsify = app.add_subcommand("falsify", "search for a counterexample");
  std::string falsify_condition = "decrease";
  falsify->add_option("--system", opts.system_path)->required();
  falsify->add_option("--certificate", opts.certificate_path)->required();
  falsify->add_option("--mode", mode, "gas | iss | ugas");
  falsify->add_option("--condition", falsify_condition, "sandwich | decrease");
  falsify->add_option("--domain", opts.domain)->expected(2);
  falsify->add_option("--samples", opts.samples);
  falsify->add_option("--refinement", refinement);
  falsify->add_option("--seed", opts.seed);
  falsify->add_option("--out", opts.out_path);

  std::string x0_text, input_text, signal_path, traj_out;
  double horizon = 10.0, step = 1e-3;
  auto* simulate = app.add_subcommand("simulate", "integrate a trajectory (RK4)");
  simulate->add_option("--system", opts.system_path)->required();
  simulate->add_option("--x0", x0_text, "comma-separated initial state")->required();
  simulate->add_option("--input-const", input_text, "comma-separated constant input");
  simulate->add_option("--signal", signal_path,
                       "signal JSON {dt, values:[[...],...]}");
  simulate->add_option("--horizon", horizon);
  simulate->add_option("--step", step);
  simulate->add_option("--out", traj_out, "trajectory CSV path")->required();

  std::string metric_path, rho_path, aug_mode = "gas", aug_out;
  auto* augment = app.add_subcommand("augment", "emit the doubled system");
  augment->add_option("--system", opts.system_path)->required();
  augment->add_option("--mode", aug_mode, "gas | iss");
  augment->add_option("--metric", metric_path, "metric JSON (iss mode)");
  augment->add_option("--rho", rho_path, "rho JSON (iss mode)");
  augment->add_option("--out", aug_out)->required();

  std::string env_kind = "gas", beta_path, env_out, trace_out;
  int pairs = 50;
  double signal_cell = 1.0;
  auto* envelope = app.add_subcommand("envelope", "fit KL envelopes from ensembles");
  envelope->add_option("--system", opts.system_path)->required();
  envelope->add_option("--kind", env_kind, "gas | iss | ugas");
  envelope->add_option("--metric", metric_path)->required();
  envelope->add_option("--beta", beta_path, "beta JSON (iss kind)");
  envelope->add_option("--rho", rho_path, "rho JSON (ugas kind)");
  envelope->add_option("--domain", opts.domain)->expected(2);
  envelope->add_option("--pairs", pairs);
  envelope->add_option("--horizon", horizon);
  envelope->add_option("--step", step);
  envelope->add_option("--signal-cell", signal_cell);
  envelope->add_option("--seed", opts.seed);
  envelope->add_option("--out", env_out, "fit JSON path");
  envelope->add_option("--trace", trace_out, "ensemble trace CSV path");

  std::string gamma_path, rho_out;
  auto* rho_cmd = app.add_subcommand("rho", "construct the disturbance scaling rho");
  rho_cmd->add_option("--beta", beta_path)->required();
  rho_cmd->add_option("--gamma", gamma_path)->required();
  rho_cmd->add_option("--out", rho_out, "rho JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e); // --help
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }

  try {
    if (check->parsed()) {
      if (opts.domain.empty()) opts.domain = {-2.0, 2.0};
      return run_check(opts, mode, iss_mode, phi_path);
    }
    if (falsify->parsed()) {
      if (opts.domain.empty()) opts.domain = {-2.0, 2.0};
      return run_falsify(opts, mode, falsify_condition, refinement);
    }
    if (simulate->parsed()) {
      istab::sys::ControlSystem system = istab::io::load_system(opts.system_path);
      std::vector<double> x0;
      std::stringstream ss(x0_text);
      for (std::string part; std::getline(ss, part, ',');)
        x0.push_back(std::stod(part));
      istab::sys::InputSignal signal = istab::sys::InputSignal::empty(horizon);
      if (!signal_path.empty()) {
        json j = istab::io::load_json(signal_path);
        signal.dt = j.at("dt").get<double>();
        signal.values = j.at("values").get<std::vector<std::vector<double>>>();
        signal.dim = signal.values.empty() ? 0
                                           : static_cast<int>(signal.values[0].size());
      } else if (!input_text.empty()) {
        std::vector<double> u;
        std::stringstream us(input_text);
        for (std::string part; std::getline(us, part, ',');)
          u.push_back(std::stod(part));
        signal = istab::sys::InputSignal::constant(u, horizon);
      } else if (system.m > 0) {
        throw istab::io::IoError("system has inputs; provide --input-const or --signal");
      }
      istab::sys::Trajectory traj =
          istab::sys::integrate(system, x0, signal, horizon, step);
      std::ofstream out(traj_out);
      if (!out) throw istab::io::IoError("cannot write '" + traj_out + "'");
      istab::io::write_trajectory_csv(out, traj);
      return kOk;
    }
    if (augment->parsed()) {
      istab::sys::ControlSystem system = istab::io::load_system(opts.system_path);
      istab::aug::AugmentedSystem asys;
      if (aug_mode == "gas") {
        asys = istab::aug::augment_gas(std::move(system));
      } else if (aug_mode == "iss") {
        if (metric_path.empty() || rho_path.empty())
          throw istab::io::IoError("iss mode needs --metric and --rho");
        auto metric =
            istab::io::metric_from_json(istab::io::load_json(metric_path), system.n);
        auto rho = istab::io::k_from_json(istab::io::load_json(rho_path));
        asys = istab::aug::augment_iss(std::move(system), std::move(metric),
                                       std::move(rho));
      } else {
        throw istab::io::IoError("--mode must be gas or iss");
      }
      istab::io::write_text_file(aug_out, istab::io::to_json(asys).dump(2) + "\n");
      return kOk;
    }
    if (envelope->parsed()) {
      istab::sys::ControlSystem system = istab::io::load_system(opts.system_path);
      auto metric =
          istab::io::metric_from_json(istab::io::load_json(metric_path), system.n);
      if (opts.domain.empty()) opts.domain = {-2.0, 2.0};
      istab::envl::EnsembleSpec spec;
      spec.pairs = pairs;
      spec.horizon = horizon;
      spec.step = step;
      spec.signal_cell = signal_cell;
      spec.seed = opts.seed;
      spec.x0_domain = uniform_box(opts.domain, system.n);
      istab::envl::EnvelopeFit fit;
      if (env_kind == "gas") {
        fit = istab::envl::estimate_gas_envelope(system, metric, spec);
      } else if (env_kind == "iss") {
        if (beta_path.empty()) throw istab::io::IoError("iss kind needs --beta");
        auto beta = istab::io::kl_from_json(istab::io::load_json(beta_path));
        fit = istab::envl::estimate_iss_gain(system, metric, beta, spec);
      } else if (env_kind == "ugas") {
        if (rho_path.empty()) throw istab::io::IoError("ugas kind needs --rho");
        auto rho = istab::io::k_from_json(istab::io::load_json(rho_path));
        auto asys = istab::aug::augment_iss(std::move(system), metric, rho);
        fit = istab::envl::validate_ugas(asys, metric, spec);
      } else {
        throw istab::io::IoError("--kind must be gas, iss, or ugas");
      }
      write_report(env_out, istab::io::to_json(fit), opts.seed);
      if (!trace_out.empty()) {
        std::ofstream out(trace_out);
        if (!out) throw istab::io::IoError("cannot write '" + trace_out + "'");
        istab::io::write_trace_csv(out, fit.traces);
      }
      return kOk;
    }
    if (rho_cmd->parsed()) {
      auto beta = istab::io::kl_from_json(istab::io::load_json(beta_path));
      auto gamma = istab::io::k_from_json(istab::io::load_json(gamma_path));
      auto rho = istab::cmp::construct_rho(beta, gamma);
      write_report(rho_out, istab::io::to_json(rho), opts.seed);
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  std::cerr << "error: no subcommand\n";
  return kError;
}
