#include "ammac/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace ammac {

double round_10sig(double v) {
  if (!std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return std::strtod(buf, nullptr);
}

std::string format_10sig(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

ordered_json to_json(const ChannelParams& params) {
  return ordered_json{{"a", round_10sig(params.a)},
                      {"sigma2", round_10sig(params.sigma2)},
                      {"P", round_10sig(params.P)}};
}

ordered_json to_json(const RadialPmf& pmf) {
  ordered_json pts = ordered_json::array();
  for (const auto& pt : pmf.points) pts.push_back({round_10sig(pt.r), round_10sig(pt.p)});
  return ordered_json{{"points", pts}};
}

ordered_json to_json(const BdDistribution& dist) {
  ordered_json pts = ordered_json::array();
  if (dist.is_points()) {
    for (const auto& pt : dist.points().points)
      pts.push_back({round_10sig(pt.x.real()), round_10sig(pt.x.imag()), round_10sig(pt.q)});
    return ordered_json{{"kind", "points"}, {"points", pts}};
  }
  for (const auto& rg : dist.circles().rings) pts.push_back({round_10sig(rg.rho), round_10sig(rg.q)});
  return ordered_json{{"kind", "circles"}, {"points", pts}};
}

ordered_json to_json(const BoundarySolution& sol, const ChannelParams& params) {
  return ordered_json{
      {"params", to_json(params)},
      {"weights", ordered_json{{"mu1", round_10sig(sol.weights.mu1)}, {"mu2", round_10sig(sol.weights.mu2)}}},
      {"f_r", to_json(sol.f_r)},
      {"f_x2", to_json(sol.f_x2)},
      {"rates", ordered_json{{"R1_bits", round_10sig(sol.rates.R1)}, {"R2_bits", round_10sig(sol.rates.R2)}}},
      {"objective_nats", round_10sig(sol.objective_nats)},
      {"lambda", round_10sig(sol.lambda)},
      {"kkt_residual_r", round_10sig(sol.kkt_residual_r)},
      {"kkt_residual_x2", round_10sig(sol.kkt_residual_x2)},
      {"converged", sol.converged},
      {"diagnostics",
       ordered_json{{"outer_cycles", sol.diagnostics.outer_cycles},
                    {"inner_iterations", sol.diagnostics.inner_iterations},
                    {"restarts_used", sol.diagnostics.restarts_used},
                    {"objective_evals", sol.diagnostics.objective_evals}}}};
}

namespace {

double require_number(const ordered_json& j, const char* ctx) {
  if (!j.is_number()) throw ConstraintViolation(std::string("expected number in ") + ctx);
  return j.get<double>();
}

}  // namespace

ChannelParams channel_params_from_json(const ordered_json& j) {
  ChannelParams p;
  p.a = require_number(j.at("a"), "ChannelParams.a");
  p.sigma2 = require_number(j.at("sigma2"), "ChannelParams.sigma2");
  p.P = require_number(j.at("P"), "ChannelParams.P");
  p.check();
  return p;
}

RadialPmf radial_pmf_from_json(const ordered_json& j) {
  RadialPmf pmf;
  for (const auto& row : j.at("points")) {
    if (!row.is_array() || row.size() != 2) throw ConstraintViolation("RadialPmf rows must be [r, p]");
    pmf.points.push_back({require_number(row[0], "RadialPmf.r"), require_number(row[1], "RadialPmf.p")});
  }
  check_radial_pmf(pmf);
  return pmf;
}

BdDistribution bd_distribution_from_json(const ordered_json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  BdDistribution dist;
  if (kind == "points") {
    BdPointMasses pm;
    for (const auto& row : j.at("points")) {
      if (!row.is_array() || row.size() != 3) throw ConstraintViolation("BD point rows must be [re, im, q]");
      pm.points.push_back({cplx(require_number(row[0], "BD.re"), require_number(row[1], "BD.im")),
                           require_number(row[2], "BD.q")});
    }
    dist.value = pm;
  } else if (kind == "circles") {
    BdConcentricCircles cc;
    for (const auto& row : j.at("points")) {
      if (!row.is_array() || row.size() != 2) throw ConstraintViolation("BD ring rows must be [rho, q]");
      cc.rings.push_back({require_number(row[0], "BD.rho"), require_number(row[1], "BD.q")});
    }
    dist.value = cc;
  } else {
    throw ConstraintViolation("BdDistribution kind must be 'points' or 'circles'");
  }
  check_bd_distribution(dist);
  return dist;
}

BoundarySolution boundary_solution_from_json(const ordered_json& j, ChannelParams* params_out) {
  BoundarySolution sol;
  if (params_out != nullptr) *params_out = channel_params_from_json(j.at("params"));
  sol.weights.mu1 = require_number(j.at("weights").at("mu1"), "weights.mu1");
  sol.weights.mu2 = require_number(j.at("weights").at("mu2"), "weights.mu2");
  sol.weights.check();
  sol.f_r = radial_pmf_from_json(j.at("f_r"));
  sol.f_x2 = bd_distribution_from_json(j.at("f_x2"));
  sol.rates.R1 = require_number(j.at("rates").at("R1_bits"), "rates.R1_bits");
  sol.rates.R2 = require_number(j.at("rates").at("R2_bits"), "rates.R2_bits");
  sol.objective_nats = require_number(j.at("objective_nats"), "objective_nats");
  sol.lambda = require_number(j.at("lambda"), "lambda");
  if (j.contains("kkt_residual_r")) sol.kkt_residual_r = j.at("kkt_residual_r").get<double>();
  if (j.contains("kkt_residual_x2")) sol.kkt_residual_x2 = j.at("kkt_residual_x2").get<double>();
  if (j.contains("converged")) sol.converged = j.at("converged").get<bool>();
  return sol;
}

}  // namespace ammac
