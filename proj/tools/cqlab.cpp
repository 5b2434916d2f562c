#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "cqlab/coercivity.hpp"
#include "cqlab/cq.hpp"
#include "cqlab/march.hpp"
#include "cqlab/tableau.hpp"
#include "cqlab/transfer.hpp"

namespace {

using nlohmann::json;
using namespace cqlab;

TransferFunction transfer_by_name(const std::string& name) {
  if (name == "exterior-sphere") return exterior_sphere();
  if (name == "interior-sphere") return interior_sphere();
  if (name == "s") return differentiator();
  if (name == "s^-1") return integrator(1);
  if (name == "s^-2") return integrator(2);
  throw config_error("unknown transfer '" + name + "'");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw config_error("cannot open output file '" + path + "'");
  os.precision(17);
  return os;
}

// Every run writes its fully resolved configuration next to the results.
void write_run_config(const std::string& out_path, const json& cfg) {
  std::ofstream os(out_path + ".run.json");
  os << cfg.dump(2) << "\n";
}

struct WeightsCmd {
  std::string method = "radau2", transfer = "exterior-sphere", out = "weights.csv";
  double tau = 0.1;
  int n = 64, oversampling = 4;

  int run() const {
    ButcherTableau t = make_tableau(method);
    ContourParams params;
    params.oversampling = oversampling;
    WeightTable w = compute_weights(transfer_by_name(transfer), t, tau, n, params);
    auto os = open_out(out);
    export_csv(w, os);
    write_run_config(out, json{{"subcommand", "weights"},
                               {"method", method},
                               {"transfer", transfer},
                               {"tau", tau},
                               {"n", n},
                               {"oversampling", oversampling},
                               {"rho", w.rho},
                               {"aliasing_bound", w.aliasing_bound},
                               {"out", out}});
    std::cout << "wrote " << n << " weight matrices (rho = " << w.rho
              << ", aliasing bound " << w.aliasing_bound << ") to " << out << "\n";
    return 0;
  }
};

struct ScanCmd {
  std::string method = "radau2", out = "scan.csv";
  double delta = 0.01;
  int ntheta = 1024;
  std::vector<double> probe_deltas;

  int run() const {
    ButcherTableau t = make_tableau(method);
    auto os = open_out(out);
    json cfg{{"subcommand", "coercivity-scan"}, {"method", method}, {"ntheta", ntheta}, {"out", out}};
    if (!probe_deltas.empty()) {
      BarrierProbe probe = order_barrier_probe(t, probe_deltas, ntheta);
      os << "delta,worst_ratio\n";
      for (std::size_t i = 0; i < probe.deltas.size(); ++i)
        os << probe.deltas[i] << "," << probe.worst_ratio[i] << "\n";
      for (std::size_t i = 0; i < probe.deltas.size(); ++i)
        std::cout << "delta " << probe.deltas[i] << ": worst_ratio " << probe.worst_ratio[i] << "\n";
      cfg["deltas"] = probe_deltas;
    } else {
      CoercivityScan scan = scan_numerical_range(t, delta, ntheta);
      os << "theta,lambda_min\n";
      for (int k = 0; k < scan.ntheta; ++k)
        os << (2.0 * pi * k / scan.ntheta) << "," << scan.lambda_min[k] << "\n";
      std::cout << "min lambda_min = " << scan.min_lambda << ", worst_ratio = " << scan.worst_ratio
                << ", hermitian defect = " << scan.max_hermitian_defect << "\n";
      cfg["delta"] = delta;
    }
    write_run_config(out, cfg);
    return 0;
  }
};

struct HerglotzCmd {
  std::string method = "radau2", transfer = "exterior-sphere", out = "herglotz.csv";
  double sigma = 0.0, tau = 6.0 / 128.0;
  int n = 128, trials = 100;
  std::uint64_t seed = 12345;

  int run() const {
    ButcherTableau t = make_tableau(method);
    TransferFunction l = transfer_by_name(transfer);
    double alpha = 0.0;
    if (transfer == "exterior-sphere" && sigma == 0.0) {
      alpha = 1.0;  // built-in certificate
    } else {
      alpha = sigma > 0 ? estimate_alpha(l, sigma) : 0.0;
      l.set_coercivity({alpha, sigma, {}});
    }
    std::vector<HerglotzReport> reports = herglotz_trials(l, t, tau, n, trials, seed);
    auto os = open_out(out);
    os << "trial,margin\n";
    double worst = std::numeric_limits<double>::infinity();
    bool tau_small = true;
    for (int i = 0; i < trials; ++i) {
      os << i << "," << reports[i].margin << "\n";
      worst = std::min(worst, reports[i].margin);
      tau_small = tau_small && reports[i].tau_small;
    }
    write_run_config(out, json{{"subcommand", "herglotz"},
                               {"method", method},
                               {"transfer", transfer},
                               {"sigma", sigma},
                               {"alpha", alpha},
                               {"tau", tau},
                               {"n", n},
                               {"trials", trials},
                               {"seed", seed},
                               {"out", out}});
    std::cout << "worst margin over " << trials << " trials: " << worst
              << (tau_small ? "" : "  [tau above the small-stepsize range: recorded, not asserted]")
              << "\n";
    return 0;
  }
};

struct MarchCmd {
  std::string problem = "interior-sphere", g = "g2", method = "radau2", variant = "plain";
  std::string deriv_data = "analytic", out = "solution.csv";
  int k = 9;
  double final_time = 6.0, sigma_shift = 0.0, newton_tol = 1e-12;
  bool causalize = false;

  int run() const {
    ButcherTableau t = make_tableau(method);
    ProblemSetup setup;
    setup.transfer = transfer_by_name(problem);
    setup.imp = impedance(g);
    setup.wave = incident_wave();
    setup.wave.set_causalize(causalize);
    setup.final_time = final_time;
    setup.variant = variant_from_name(variant);
    setup.shift = sigma_shift;
    setup.derivative_data =
        deriv_data == "discrete" ? DerivativeData::discrete : DerivativeData::analytic;
    setup.newton_tolerance = newton_tol;
    double tau = final_time / std::pow(2.0, k);
    Solution sol = march(setup, t, tau);
    auto os = open_out(out);
    bool diff = setup.variant != Variant::plain;
    os << (diff ? "t,psi,differentiated\n" : "t,psi\n");
    for (int step = 0; step < sol.steps; ++step) {
      os << (step + t.c[t.m - 1]) * tau << "," << sol.node_value(step);
      if (diff) os << "," << sol.differentiated.entries[step].back().real();
      os << "\n";
    }
    write_run_config(out, json{{"subcommand", "march"},
                               {"problem", problem},
                               {"g", g},
                               {"method", method},
                               {"variant", variant},
                               {"derivative_data", deriv_data},
                               {"k", k},
                               {"tau", tau},
                               {"final_time", final_time},
                               {"sigma_shift", sigma_shift},
                               {"newton_tol", newton_tol},
                               {"causalize", causalize},
                               {"out", out}});
    std::cout << "marched " << sol.steps << " steps (max newton iterations "
              << sol.max_newton_iterations() << ", max residual " << sol.max_newton_residual()
              << ")\n";
    return 0;
  }
};

struct ConvergeCmd {
  std::string problem = "interior-sphere", g = "g2", method = "radau2", variant = "plain";
  std::string out = "results.csv", reference_tableau = "radau3";
  int kmin = 4, kmax = 9, kref = 12, drop_coarsest = 0;
  double final_time = 6.0, sigma_shift = 0.0, newton_tol = 1e-12;

  int run() const {
    ButcherTableau t = make_tableau(method);
    ProblemSetup setup;
    setup.transfer = transfer_by_name(problem);
    setup.imp = impedance(g);
    setup.wave = incident_wave();
    setup.final_time = final_time;
    setup.variant = variant_from_name(variant);
    setup.shift = sigma_shift;
    setup.newton_tolerance = newton_tol;
    StudyOptions opts;
    opts.k_ref = kref;
    opts.reference_tableau = reference_tableau;
    opts.drop_coarsest = drop_coarsest;
    ErrorReport report = convergence_study(setup, t, kmin, kmax, opts);
    auto os = open_out(out);
    // error follows the plotting convention tau * sum ||e||^2 (the square of
    // the homogeneous l2-tau norm), so the slope column is its fitted order.
    os << "tau,N,error,newton_max_iters,slope\n";
    for (std::size_t i = 0; i < report.taus.size(); ++i) {
      os << report.taus[i] << "," << static_cast<int>(std::llround(final_time / report.taus[i]))
         << "," << report.errors[i] * report.errors[i] << "," << report.newton_max[i] << ",";
      if (i + 1 == report.taus.size()) os << report.slope;
      os << "\n";
    }
    write_run_config(out, json{{"subcommand", "converge"},
                               {"problem", problem},
                               {"g", g},
                               {"method", method},
                               {"variant", variant},
                               {"kmin", kmin},
                               {"kmax", kmax},
                               {"kref", kref},
                               {"reference_tableau", reference_tableau},
                               {"drop_coarsest", drop_coarsest},
                               {"final_time", final_time},
                               {"sigma_shift", sigma_shift},
                               {"newton_tol", newton_tol},
                               {"slope", report.slope},
                               {"slope_l2", report.slope_l2},
                               {"out", out}});
    std::cout << "fitted slope " << report.slope << " (l2-norm slope " << report.slope_l2
              << ", fit residual " << report.fit_residual << ")\n";
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cqlab: Runge-Kutta convolution quadrature laboratory"};
  app.require_subcommand(1);

  WeightsCmd wcmd;
  auto* wsub = app.add_subcommand("weights", "compute a CQ weight table and dump it as CSV");
  wsub->add_option("--method", wcmd.method);
  wsub->add_option("--transfer", wcmd.transfer);
  wsub->add_option("--tau", wcmd.tau);
  wsub->add_option("--n", wcmd.n);
  wsub->add_option("--oversampling", wcmd.oversampling);
  wsub->add_option("--out", wcmd.out);

  ScanCmd scmd;
  auto* ssub = app.add_subcommand("coercivity-scan", "numerical-range scan of Delta(zeta)");
  ssub->add_option("--method", scmd.method);
  ssub->add_option("--delta", scmd.delta);
  ssub->add_option("--ntheta", scmd.ntheta);
  ssub->add_option("--deltas", scmd.probe_deltas, "probe worst_ratio over a delta list")
      ->delimiter(',');
  ssub->add_option("--out", scmd.out);

  HerglotzCmd hcmd;
  auto* hsub = app.add_subcommand("herglotz", "discrete convolution coercivity trials");
  hsub->add_option("--method", hcmd.method);
  hsub->add_option("--transfer", hcmd.transfer);
  hsub->add_option("--sigma", hcmd.sigma);
  hsub->add_option("--tau", hcmd.tau);
  hsub->add_option("--n", hcmd.n);
  hsub->add_option("--trials", hcmd.trials);
  hsub->add_option("--seed", hcmd.seed);
  hsub->add_option("--out", hcmd.out);

  MarchCmd mcmd;
  auto* msub = app.add_subcommand("march", "marching-on-in-time solve, node values to CSV");
  msub->add_option("--problem", mcmd.problem);
  msub->add_option("--g", mcmd.g);
  msub->add_option("--method", mcmd.method);
  msub->add_option("--variant", mcmd.variant);
  msub->add_option("--deriv-data", mcmd.deriv_data);
  msub->add_option("--k", mcmd.k, "stepsize tau = T / 2^k");
  msub->add_option("--final-time", mcmd.final_time);
  msub->add_option("--sigma-shift", mcmd.sigma_shift);
  msub->add_option("--newton-tol", mcmd.newton_tol);
  msub->add_flag("--causalize", mcmd.causalize);
  msub->add_option("--out", mcmd.out);

  ConvergeCmd ccmd;
  auto* csub = app.add_subcommand("converge", "convergence study against a fine reference");
  csub->add_option("--problem", ccmd.problem);
  csub->add_option("--g", ccmd.g);
  csub->add_option("--method", ccmd.method);
  csub->add_option("--variant", ccmd.variant);
  csub->add_option("--kmin", ccmd.kmin);
  csub->add_option("--kmax", ccmd.kmax);
  csub->add_option("--kref", ccmd.kref);
  csub->add_option("--reference-tableau", ccmd.reference_tableau);
  csub->add_option("--drop-coarsest", ccmd.drop_coarsest);
  csub->add_option("--final-time", ccmd.final_time);
  csub->add_option("--sigma-shift", ccmd.sigma_shift);
  csub->add_option("--newton-tol", ccmd.newton_tol);
  csub->add_option("--out", ccmd.out);

  try {
    app.parse(argc, argv);
    if (wsub->parsed()) return wcmd.run();
    if (ssub->parsed()) return scmd.run();
    if (hsub->parsed()) return hcmd.run();
    if (msub->parsed()) return mcmd.run();
    if (csub->parsed()) return ccmd.run();
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const cqlab::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
