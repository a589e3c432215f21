#include "ammac/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ammac {

namespace {

std::string fmt_violation(const char* what, double value, double bound) {
  std::ostringstream os;
  os << what << ": value " << value << " vs bound " << bound
     << " (excess " << value - bound << ")";
  return os.str();
}

}  // namespace

void ChannelParams::check() const {
  if (!std::isfinite(a) || a == 0.0) throw ConstraintViolation("ChannelParams.a must be finite and nonzero");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw ConstraintViolation(fmt_violation("ChannelParams.sigma2 must be > 0", sigma2, 0.0));
  if (!(P > 0.0) || !std::isfinite(P))
    throw ConstraintViolation(fmt_violation("ChannelParams.P must be > 0", P, 0.0));
}

double RadialPmf::second_moment() const {
  double m2 = 0.0;
  for (const auto& pt : points) m2 += pt.p * pt.r * pt.r;
  return m2;
}

double RadialPmf::prob_sum() const {
  double s = 0.0;
  for (const auto& pt : points) s += pt.p;
  return s;
}

double BdDistribution::prob_sum() const {
  double s = 0.0;
  if (is_points()) {
    for (const auto& pt : points().points) s += pt.q;
  } else {
    for (const auto& rg : circles().rings) s += rg.q;
  }
  return s;
}

std::size_t BdDistribution::support_size() const {
  return is_points() ? points().points.size() : circles().rings.size();
}

void Weights::check() const {
  if (mu1 < 0.0 || mu2 < 0.0) throw ConstraintViolation("Weights must be nonnegative");
  if (std::abs(mu1 + mu2 - 1.0) > kProbSumTol)
    throw ConstraintViolation(fmt_violation("Weights must sum to 1", mu1 + mu2, 1.0));
}

void QuadConfig::check() const {
  if (radial_nodes < 8 || angular_nodes < 8 || mc_samples < 8)
    throw ConfigError("QuadConfig counts must be >= 8");
  if (!(rel_tol > 0.0) || rel_tol > 1e-2)
    throw ConfigError("QuadConfig.rel_tol must lie in (0, 1e-2]");
  if (!(radial_cutoff_sigmas > 0.0)) throw ConfigError("QuadConfig.radial_cutoff_sigmas must be > 0");
}

void check_radial_pmf(const RadialPmf& f_r, double merge_tol) {
  if (f_r.points.empty()) throw DegenerateDistribution("RadialPmf has no mass points");
  for (const auto& pt : f_r.points) {
    if (!(pt.p > 0.0)) throw ConstraintViolation("RadialPmf probabilities must be > 0");
    if (pt.r < 0.0 || !std::isfinite(pt.r)) throw ConstraintViolation("RadialPmf amplitudes must be >= 0");
  }
  const double s = f_r.prob_sum();
  if (std::abs(s - 1.0) > kProbSumTol)
    throw ConstraintViolation(fmt_violation("RadialPmf probabilities must sum to 1", s, 1.0));
  for (std::size_t i = 0; i < f_r.points.size(); ++i)
    for (std::size_t j = i + 1; j < f_r.points.size(); ++j)
      if (std::abs(f_r.points[i].r - f_r.points[j].r) <= merge_tol)
        throw ConstraintViolation("RadialPmf amplitudes must be pairwise distinct beyond merge tolerance");
}

void check_bd_distribution(const BdDistribution& f_x2, double merge_tol) {
  if (f_x2.support_size() == 0) throw DegenerateDistribution("BdDistribution has no mass points");
  const double s = f_x2.prob_sum();
  if (std::abs(s - 1.0) > kProbSumTol)
    throw ConstraintViolation(fmt_violation("BdDistribution probabilities must sum to 1", s, 1.0));
  if (f_x2.is_points()) {
    const auto& pts = f_x2.points().points;
    for (const auto& pt : pts) {
      if (!(pt.q > 0.0)) throw ConstraintViolation("BdDistribution probabilities must be > 0");
      if (std::abs(pt.x) > 1.0 + 1e-12)
        throw ConstraintViolation(fmt_violation("BD peak amplitude |x| <= 1 violated", std::abs(pt.x), 1.0));
    }
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        if (std::abs(pts[i].x - pts[j].x) <= merge_tol)
          throw ConstraintViolation("BD mass points must be pairwise distinct beyond merge tolerance");
  } else {
    const auto& rings = f_x2.circles().rings;
    for (const auto& rg : rings) {
      if (!(rg.q > 0.0)) throw ConstraintViolation("BdDistribution probabilities must be > 0");
      if (rg.rho < 0.0 || rg.rho > 1.0)
        throw ConstraintViolation(fmt_violation("BD ring radius must lie in [0,1]", rg.rho, 1.0));
    }
    for (std::size_t i = 0; i < rings.size(); ++i)
      for (std::size_t j = i + 1; j < rings.size(); ++j)
        if (std::abs(rings[i].rho - rings[j].rho) <= merge_tol)
          throw ConstraintViolation("BD ring radii must be pairwise distinct beyond merge tolerance");
  }
}

void validate(const ChannelParams& params, const RadialPmf& f_r, const BdDistribution& f_x2) {
  params.check();
  check_radial_pmf(f_r);
  check_bd_distribution(f_x2);
  const double m2 = f_r.second_moment();
  if (m2 > params.P * (1.0 + kPowerSlack))
    throw ConstraintViolation(fmt_violation("PT power budget E[r^2] <= P violated", m2, params.P));
}

namespace {

// Greedy agglomerative merge of 1-D locations; repeats until no pair is
// within tol so the operation is a fixpoint (idempotent).
template <typename Loc>
struct MergeEntry {
  Loc loc;
  double prob;
};

template <typename Loc, typename DistFn>
std::vector<MergeEntry<Loc>> merge_entries(std::vector<MergeEntry<Loc>> pts, double tol, DistFn dist) {
  bool merged = true;
  while (merged && pts.size() > 1) {
    merged = false;
    for (std::size_t i = 0; i < pts.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < pts.size() && !merged; ++j) {
        if (dist(pts[i].loc, pts[j].loc) <= tol) {
          const double w = pts[i].prob + pts[j].prob;
          pts[i].loc = (pts[i].loc * pts[i].prob + pts[j].loc * pts[j].prob) / w;
          pts[i].prob = w;
          pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(j));
          merged = true;
        }
      }
    }
  }
  return pts;
}

template <typename Loc>
std::vector<MergeEntry<Loc>> prune_and_renormalize(std::vector<MergeEntry<Loc>> pts) {
  std::erase_if(pts, [](const MergeEntry<Loc>& e) { return e.prob < kProbPruneTol; });
  double s = 0.0;
  for (const auto& e : pts) s += e.prob;
  if (pts.empty() || !(s > 0.0)) throw DegenerateDistribution("all mass pruned in normalize_and_merge");
  for (auto& e : pts) e.prob /= s;
  return pts;
}

}  // namespace

RadialPmf normalize_and_merge(const RadialPmf& pmf, double merge_tol) {
  if (!(merge_tol > 0.0)) throw ConfigError("merge_tol must be > 0");
  std::vector<MergeEntry<double>> pts;
  pts.reserve(pmf.points.size());
  for (const auto& pt : pmf.points) pts.push_back({pt.r, pt.p});
  pts = prune_and_renormalize(merge_entries(
      std::move(pts), merge_tol, [](double u, double v) { return std::abs(u - v); }));
  std::sort(pts.begin(), pts.end(),
            [](const auto& u, const auto& v) { return u.loc < v.loc; });
  RadialPmf out;
  for (const auto& e : pts) out.points.push_back({std::max(0.0, e.loc), e.prob});
  return out;
}

BdDistribution normalize_and_merge(const BdDistribution& dist, double merge_tol) {
  if (!(merge_tol > 0.0)) throw ConfigError("merge_tol must be > 0");
  if (dist.is_points()) {
    std::vector<MergeEntry<cplx>> pts;
    for (const auto& pt : dist.points().points) pts.push_back({pt.x, pt.q});
    pts = prune_and_renormalize(merge_entries(
        std::move(pts), merge_tol, [](cplx u, cplx v) { return std::abs(u - v); }));
    std::sort(pts.begin(), pts.end(), [](const auto& u, const auto& v) {
      if (u.loc.real() != v.loc.real()) return u.loc.real() < v.loc.real();
      return u.loc.imag() < v.loc.imag();
    });
    BdPointMasses out;
    for (const auto& e : pts) {
      cplx x = e.loc;
      const double mag = std::abs(x);
      if (mag > 1.0) x /= mag;  // merged centroid can leave the disk by roundoff
      out.points.push_back({x, e.prob});
    }
    return BdDistribution{out};
  }
  std::vector<MergeEntry<double>> rings;
  for (const auto& rg : dist.circles().rings) rings.push_back({rg.rho, rg.q});
  rings = prune_and_renormalize(merge_entries(
      std::move(rings), merge_tol, [](double u, double v) { return std::abs(u - v); }));
  std::sort(rings.begin(), rings.end(),
            [](const auto& u, const auto& v) { return u.loc < v.loc; });
  BdConcentricCircles out;
  for (const auto& e : rings) out.rings.push_back({std::clamp(e.loc, 0.0, 1.0), e.prob});
  return BdDistribution{out};
}

}  // namespace ammac
