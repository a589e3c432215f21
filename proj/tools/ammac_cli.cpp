#include <cmath>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ammac/report_io.hpp"

namespace {

void add_common(CLI::App* sub, ammac::cli::RunConfig* rc, double* snr_db, double* p_flag) {
  sub->add_option("--a", rc->params.a, "direct-link gain (nonzero real)");
  sub->add_option("--snr-db", *snr_db, "sets P = sigma2 * 10^(snr/10)");
  sub->add_option("--sigma2", rc->params.sigma2, "noise variance");
  sub->add_option("--p", *p_flag, "PT average power budget (overrides --snr-db)");
  sub->add_option("--out", rc->out_dir, "output directory");
  sub->add_option("--seed", rc->quad.mc_seed, "seed for every randomized quantity");
  sub->add_option("--mc-samples", rc->quad.mc_samples, "Monte Carlo sample count");
  sub->add_option("--radial-nodes", rc->quad.radial_nodes, "radial quadrature node budget");
  sub->add_option("--angular-nodes", rc->quad.angular_nodes, "angular quadrature nodes");
  sub->add_option("--kkt-tol", rc->optim.kkt_tol, "KKT residual tolerance (nats)");
  sub->add_option("--restarts", rc->optim.restarts, "optimizer restarts");
  sub->set_config("--config", "", "TOML config file; command-line flags win");
  sub->allow_config_extras(CLI::config_extras_mode::ignore);
}

void resolve_power(ammac::cli::RunConfig* rc, double snr_db, double p_flag) {
  if (!std::isnan(p_flag))
    rc->params.P = p_flag;
  else if (!std::isnan(snr_db))
    rc->params.P = rc->params.sigma2 * std::pow(10.0, snr_db / 10.0);
  rc->optim.seed = rc->quad.mc_seed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacity region of the two-user additive-multiplicative MAC"};
  app.require_subcommand(1);

  ammac::cli::RunConfig rc;
  double snr_db = std::nan("");
  double p_flag = std::nan("");

  auto* corners = app.add_subcommand("corners", "closed-form corners and the BD-max rate");
  auto* boundary = app.add_subcommand("boundary", "trace the capacity-region boundary");
  auto* baseline = app.add_subcommand("baseline", "baseline rate pair over an SNR grid");
  auto* bdmax = app.add_subcommand("bdmax", "BD maximum-rate point (concentric circles)");
  auto* kkt = app.add_subcommand("kkt", "verify KKT conditions of a saved solution");
  auto* mc_check = app.add_subcommand("mc-check", "quadrature vs Monte Carlo cross-check");

  for (CLI::App* sub : {corners, boundary, baseline, bdmax, kkt, mc_check})
    add_common(sub, &rc, &snr_db, &p_flag);

  boundary->add_option("--weights", rc.boundary_weights, "number of weight vectors in [0, 0.5]");
  baseline->add_option("--snr-grid", rc.snr_grid_db, "SNR grid in dB");
  kkt->add_option("solution", rc.solution_file, "solution JSON from the boundary command")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ammac::cli::kExitInvalidInput;
  }

  resolve_power(&rc, snr_db, p_flag);

  if (corners->parsed()) return ammac::cli::cmd_corners(rc, std::cout);
  if (boundary->parsed()) return ammac::cli::cmd_boundary(rc, std::cout);
  if (baseline->parsed()) return ammac::cli::cmd_baseline(rc, std::cout);
  if (bdmax->parsed()) return ammac::cli::cmd_bdmax(rc, std::cout);
  if (kkt->parsed()) return ammac::cli::cmd_kkt(rc, std::cout);
  if (mc_check->parsed()) return ammac::cli::cmd_mc_check(rc, std::cout);
  return ammac::cli::kExitInvalidInput;
}
