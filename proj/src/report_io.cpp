#include "ammac/report_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ammac/baseline.hpp"
#include "ammac/entropy.hpp"
#include "ammac/mc.hpp"
#include "ammac/serialize.hpp"

namespace ammac::cli {

namespace {

namespace fs = std::filesystem;

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  std::ofstream f(fs::path(dir) / name, std::ios::binary);
  if (!f) throw ConfigError("cannot write output file " + name + " under " + dir);
  f << content;
}

std::string csv_cell(double v) {
  if (std::isnan(v)) return "nan";
  return format_10sig(v);
}

int classify(const std::exception& e, std::ostream& out) {
  out << "error: " << e.what() << "\n";
  if (dynamic_cast<const QuadratureDivergence*>(&e) != nullptr ||
      dynamic_cast<const FormulaMismatch*>(&e) != nullptr)
    return kExitNumericalFailure;
  return kExitInvalidInput;
}

}  // namespace

void randomized_model(const ChannelParams& params, std::uint64_t seed, RadialPmf* f_r,
                      BdDistribution* f_x2) {
  const mc::CounterRng rng(seed, 77);
  std::uint64_t c = 0;
  const double sp = std::sqrt(params.P);
  RadialPmf pmf;
  std::vector<double> probs;
  for (int k = 0; k < 3; ++k) {
    pmf.points.push_back({sp * (0.25 + 1.2 * rng.uniform(c++)) * (k + 1) / 3.0, 0.0});
    probs.push_back(0.2 + rng.uniform(c++));
  }
  double ps = probs[0] + probs[1] + probs[2];
  for (int k = 0; k < 3; ++k) pmf.points[static_cast<std::size_t>(k)].p = probs[static_cast<std::size_t>(k)] / ps;
  const double m2 = pmf.second_moment();
  if (m2 > params.P) {
    const double s = std::sqrt(params.P / m2);
    for (auto& pt : pmf.points) pt.r *= s;
  }
  BdPointMasses pm;
  std::vector<double> qs;
  for (int m = 0; m < 3; ++m) {
    const double rho = 0.3 + 0.7 * rng.uniform(c++);
    const double th = 2.0 * M_PI * rng.uniform(c++) - M_PI;
    pm.points.push_back({rho * std::exp(cplx(0.0, th)), 0.0});
    qs.push_back(0.2 + rng.uniform(c++));
  }
  const double qsum = qs[0] + qs[1] + qs[2];
  for (int m = 0; m < 3; ++m) pm.points[static_cast<std::size_t>(m)].q = qs[static_cast<std::size_t>(m)] / qsum;
  *f_r = normalize_and_merge(pmf);
  *f_x2 = normalize_and_merge(BdDistribution{pm});
}

int cmd_corners(const RunConfig& rc, std::ostream& out) {
  try {
    rc.params.check();
    const BoundarySolution bd = solve_bd_max(rc.params, rc.quad, rc.optim);
    ordered_json j{{"c_sum_bits", round_10sig(c_sum(rc.params))},
                   {"c1_bits", round_10sig(c1(rc.params))},
                   {"bd_max_bits", round_10sig(bd.rates.R2)}};
    const std::string text = j.dump(2) + "\n";
    out << text;
    write_file(rc.out_dir, "corners.json", text);
    return bd.converged ? kExitOk : kExitNumericalFailure;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

int cmd_boundary(const RunConfig& rc, std::ostream& out) {
  try {
    rc.params.check();
    if (rc.out_dir.empty()) {
      out << "error: boundary requires --out <dir>\n";
      return kExitInvalidInput;
    }
    const BoundaryTrace trace =
        trace_boundary(rc.params, default_mu1_schedule(rc.boundary_weights), rc.quad, rc.optim);

    std::ostringstream csv;
    csv << "mu1,R1_bits,R2_bits,n_points_r,n_points_x2,kkt_res_r,kkt_res_x2,lambda,converged\n";
    for (const auto& sol : trace.points) {
      csv << csv_cell(sol.weights.mu1) << ',' << csv_cell(sol.rates.R1) << ','
          << csv_cell(sol.rates.R2) << ',' << sol.f_r.points.size() << ','
          << sol.f_x2.support_size() << ',' << csv_cell(sol.kkt_residual_r) << ','
          << csv_cell(sol.kkt_residual_x2) << ',' << csv_cell(sol.lambda) << ','
          << (sol.converged ? 1 : 0) << "\n";
    }
    std::ostringstream hull;
    hull << "R1_bits,R2_bits\n";
    for (const auto& pt : trace.hull) hull << csv_cell(pt.R1) << ',' << csv_cell(pt.R2) << "\n";

    write_file(rc.out_dir, "boundary.csv", csv.str());
    write_file(rc.out_dir, "boundary_hull.csv", hull.str());
    for (std::size_t i = 0; i < trace.points.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "boundary_point_%02zu.json", i);
      write_file(rc.out_dir, name, to_json(trace.points[i], rc.params).dump(2) + "\n");
    }
    int n_conv = 0;
    for (const auto& sol : trace.points) n_conv += sol.converged ? 1 : 0;
    out << "boundary: " << trace.points.size() << " weights, " << n_conv
        << " converged, hull size " << trace.hull.size() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

int cmd_baseline(const RunConfig& rc, std::ostream& out) {
  try {
    rc.params.check();
    std::ostringstream csv;
    csv << "snr_db,r1_base,r1_lower,r2_base,r2_asym,c_sum\n";
    for (double snr_db : rc.snr_grid_db) {
      ChannelParams p = rc.params;
      p.P = p.sigma2 * std::pow(10.0, snr_db / 10.0);
      const BaselineReport rep = baseline_report(p, rc.quad);
      csv << csv_cell(snr_db) << ',' << csv_cell(rep.r1_base) << ',' << csv_cell(rep.r1_lower)
          << ',' << csv_cell(rep.r2_base) << ',' << csv_cell(rep.r2_asym) << ','
          << csv_cell(rep.c_sum) << "\n";
    }
    out << csv.str();
    write_file(rc.out_dir, "baseline.csv", csv.str());
    return kExitOk;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

int cmd_bdmax(const RunConfig& rc, std::ostream& out) {
  try {
    rc.params.check();
    const BoundarySolution sol = solve_bd_max(rc.params, rc.quad, rc.optim);
    ordered_json j{{"bd_max_bits", round_10sig(sol.rates.R2)},
                   {"r1_bits", round_10sig(sol.rates.R1)},
                   {"f_x2", to_json(sol.f_x2)},
                   {"kkt_residual", round_10sig(sol.kkt_residual_x2)},
                   {"converged", sol.converged}};
    const std::string text = j.dump(2) + "\n";
    out << text;
    write_file(rc.out_dir, "bdmax.json", text);
    return sol.converged ? kExitOk : kExitNumericalFailure;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

int cmd_kkt(const RunConfig& rc, std::ostream& out) {
  try {
    if (rc.solution_file.empty()) {
      out << "error: kkt requires a solution JSON file\n";
      return kExitInvalidInput;
    }
    std::ifstream f(rc.solution_file);
    if (!f) {
      out << "error: cannot open " << rc.solution_file << "\n";
      return kExitInvalidInput;
    }
    ordered_json j;
    try {
      j = ordered_json::parse(f);
    } catch (const std::exception& e) {
      out << "error: malformed solution file: " << e.what() << "\n";
      return kExitInvalidInput;
    }
    ChannelParams params = rc.params;
    const BoundarySolution sol = boundary_solution_from_json(j, &params);

    ordered_json rep = ordered_json::object();
    std::string grids;
    if (sol.weights.mu1 > 0.0 && sol.f_x2.is_points()) {
      std::vector<std::pair<double, double>> grid_r;
      const KktReport kr = kkt_check_r(sol, params, rc.quad, rc.optim, false, &grid_r);
      rep["r"] = ordered_json{{"level", round_10sig(kr.level)},
                              {"max_violation", round_10sig(kr.max_violation)},
                              {"violation_r", round_10sig(kr.violation_r)},
                              {"on_support_spread", round_10sig(kr.on_support_spread)}};
      std::ostringstream csv;
      csv << "r,L_r\n";
      for (const auto& [r, v] : grid_r) csv << csv_cell(r) << ',' << csv_cell(v) << "\n";
      write_file(rc.out_dir, "kkt_L_r.csv", csv.str());
    }
    if (sol.f_x2.is_points()) {
      std::vector<std::pair<cplx, double>> grid_x2;
      const KktReport kx = kkt_check_x2(sol, params, rc.quad, rc.optim, &grid_x2);
      rep["x2"] = ordered_json{{"level", round_10sig(kx.level)},
                               {"max_violation", round_10sig(kx.max_violation)},
                               {"violation_re", round_10sig(kx.violation_x2.real())},
                               {"violation_im", round_10sig(kx.violation_x2.imag())},
                               {"on_support_spread", round_10sig(kx.on_support_spread)},
                               {"cluster", kx.cluster_diagnostic}};
      std::ostringstream csv;
      csv << "re,im,omega2\n";
      for (const auto& [x, v] : grid_x2)
        csv << csv_cell(x.real()) << ',' << csv_cell(x.imag()) << ',' << csv_cell(v) << "\n";
      write_file(rc.out_dir, "kkt_omega2.csv", csv.str());
    } else {
      std::vector<std::pair<double, double>> grid_rho;
      const KktReport kx = kkt_check_rings(sol, params, rc.quad, rc.optim, &grid_rho);
      rep["rings"] = ordered_json{{"level", round_10sig(kx.level)},
                                  {"max_violation", round_10sig(kx.max_violation)},
                                  {"violation_rho", round_10sig(kx.violation_r)},
                                  {"on_support_spread", round_10sig(kx.on_support_spread)}};
      std::ostringstream csv;
      csv << "rho,T\n";
      for (const auto& [rho, v] : grid_rho) csv << csv_cell(rho) << ',' << csv_cell(v) << "\n";
      write_file(rc.out_dir, "kkt_ring_scan.csv", csv.str());
    }
    (void)grids;
    const std::string text = rep.dump(2) + "\n";
    out << text;
    write_file(rc.out_dir, "kkt_report.json", text);
    return kExitOk;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

int cmd_mc_check(const RunConfig& rc, std::ostream& out) {
  try {
    rc.params.check();
    rc.quad.check();
    RadialPmf f_r;
    BdDistribution f_x2;
    randomized_model(rc.params, rc.quad.mc_seed, &f_r, &f_x2);

    // Quadrature values at the configured (possibly deliberately coarse)
    // resolution; no self-refinement so miscalibration shows up in z.
    const EntropyReport hy = h_Y(f_r, f_x2, rc.params, rc.quad, EvalMode::fast);
    const EntropyReport hyx1 = h_Y_given_X1(f_r, f_x2, rc.params, rc.quad, EvalMode::fast);
    const MutualInfos mi = mutual_infos(f_r, f_x2, rc.params, rc.quad, EvalMode::fast);
    const mc::McEstimate m_hy = mc::mc_h_Y(f_r, f_x2, rc.params, rc.quad);
    const mc::McEstimate m_hyx1 = mc::mc_h_Y_given_X1(f_r, f_x2, rc.params, rc.quad);
    const mc::McMutualInfos m_mi = mc::mc_mutual_infos(f_r, f_x2, rc.params, rc.quad);

    ordered_json j = ordered_json::object();
    bool flagged = false;
    auto add = [&](const char* name, double quad, const mc::McEstimate& est) {
      const double z = (quad - est.mean) / std::max(est.std_error, 1e-300);
      flagged = flagged || std::abs(z) > 3.0;
      j[name] = ordered_json{{"quad", round_10sig(quad)},
                             {"mc_mean", round_10sig(est.mean)},
                             {"mc_se", round_10sig(est.std_error)},
                             {"z_score", round_10sig(z)}};
    };
    add("h_Y", hy.value_nats, m_hy);
    add("h_Y_given_X1", hyx1.value_nats, m_hyx1);
    add("I_x1_y", mi.I_x1_y, m_mi.I_x1_y);
    add("I_x2_y_given_x1", mi.I_x2_y_given_x1, m_mi.I_x2_y_given_x1);
    add("I_joint", mi.I_joint, m_mi.I_joint);
    add("I_x1_y_given_x2", mi.I_x1_y_given_x2, m_mi.I_x1_y_given_x2);
    j["flagged"] = flagged;
    j["model"] = ordered_json{{"f_r", to_json(f_r)}, {"f_x2", to_json(f_x2)}};
    const std::string text = j.dump(2) + "\n";
    out << text;
    write_file(rc.out_dir, "mc_check.json", text);
    return kExitOk;
  } catch (const std::exception& e) {
    return classify(e, out);
  }
}

}  // namespace ammac::cli
