#include "ammac/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "ammac/baseline.hpp"
#include "ammac/entropy.hpp"
#include "ammac/kernels.hpp"
#include "ammac/mc.hpp"
#include "ammac/special.hpp"

namespace ammac {

void OptimConfig::check() const {
  if (max_points_r < 1 || max_points_x2 < 1) throw ConfigError("OptimConfig point caps must be >= 1");
  if (!(kkt_tol > 0.0) || kkt_tol > 1e-1) throw ConfigError("OptimConfig.kkt_tol must lie in (0, 1e-1]");
  if (grid_r_points < 200) throw ConfigError("OptimConfig.grid_r_points must be >= 200");
  if (grid_x2_radii * grid_x2_angles < 500)
    throw ConfigError("OptimConfig disk grid must have >= 500 nodes");
  if (restarts < 1 || max_outer < 1 || max_inner < 1) throw ConfigError("OptimConfig iteration counts must be >= 1");
  if (!(step_init > 0.0) || !(convergence_tol > 0.0)) throw ConfigError("OptimConfig steps must be > 0");
  if (!(grid_r_span > 0.0)) throw ConfigError("OptimConfig.grid_r_span must be > 0");
}

namespace {

using engine::GaussMixture2D;
using engine::LogFyTable;
using engine::RadialMixture;

constexpr double kTinyImprove = 1e-13;

double sgn(double v) { return v < 0.0 ? -1.0 : 1.0; }

std::vector<double> project_simplex(std::vector<double> v) {
  // Euclidean projection onto {p >= 0, sum p = 1}; preserves exact zeros.
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double theta = 0.0;
  int k = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) {
      theta = t;
      k = static_cast<int>(i + 1);
    }
  }
  (void)k;
  for (auto& x : v) x = std::max(0.0, x - theta);
  double s = std::accumulate(v.begin(), v.end(), 0.0);
  if (s <= 0.0) {
    std::fill(v.begin(), v.end(), 1.0 / static_cast<double>(v.size()));
  } else {
    for (auto& x : v) x /= s;
  }
  return v;
}

cplx disk_project(cplx x) {
  const double m = std::abs(x);
  return m > 1.0 ? x / m : x;
}

// --- internal state -------------------------------------------------------

struct PointState {
  std::vector<double> r;
  std::vector<double> p;
  std::vector<cplx> x;
  std::vector<double> q;

  std::size_t nr() const { return r.size(); }
  std::size_t nx() const { return x.size(); }

  double er2() const {
    double s = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) s += p[k] * r[k] * r[k];
    return s;
  }
};

RadialPmf to_radial_pmf(const PointState& st) {
  RadialPmf pmf;
  for (std::size_t k = 0; k < st.nr(); ++k) pmf.points.push_back({st.r[k], st.p[k]});
  return pmf;
}

BdDistribution to_bd_points(const PointState& st) {
  BdPointMasses pm;
  for (std::size_t m = 0; m < st.nx(); ++m) pm.points.push_back({st.x[m], st.q[m]});
  return BdDistribution{pm};
}

PointState merge_prune(const PointState& st) {
  const RadialPmf pmf = normalize_and_merge(to_radial_pmf(st));
  const BdDistribution bd = normalize_and_merge(to_bd_points(st));
  PointState out;
  for (const auto& pt : pmf.points) {
    out.r.push_back(pt.r);
    out.p.push_back(pt.p);
  }
  for (const auto& pt : bd.points().points) {
    out.x.push_back(pt.x);
    out.q.push_back(pt.q);
  }
  return out;
}

// 2-D density value of a noisy ring of center radius c at |y| = rho.
inline double ring2d(double rho, double c, double sigma2) {
  const double d = rho - c;
  return std::exp(-d * d / sigma2) * i0_scaled(2.0 * rho * c / sigma2) / (M_PI * sigma2);
}

inline double gauss2d(cplx d, double sigma2) {
  return std::exp(-std::norm(d) / sigma2) / (M_PI * sigma2);
}

// --- incremental objective evaluator ---------------------------------------
//
// Caches per-node component values in the linear domain so probing a single
// coordinate costs arithmetic, not transcendental, work. G(lambda) =
// mu1 h(Y) + (mu2 - mu1) sum_k p_k H(r_k) - lambda E[r^2], dropping state
// independent constants.
class Eval {
 public:
  Eval(const ChannelParams& params, const Weights& weights, const QuadConfig& cfg)
      : params_(params), cfg_(cfg), mu1_(weights.mu1), mud_(weights.mu2 - weights.mu1),
        sigma2_(params.sigma2) {
    // Slimmer window than the verification one: the ascent only needs the
    // objective to ~1e-6, and this loop dominates the solve time.
    const double cut = cfg.radial_cutoff_sigmas * std::sqrt(sigma2_);
    const int n_panels = 3;
    const double h = cut / n_panels;
    for (int pnl = 0; pnl < n_panels; ++pnl)
      engine::append_gl_panel(win_.radial, 8, pnl * h, (pnl + 1) * h);
    win_.angular = build_angular_rule_n(24);
    n_win_ = win_.radial.size() * win_.angular.nodes.size();
    offs_.resize(n_win_);
    gw_.resize(n_win_);
    const double log_norm = -std::log(M_PI * sigma2_);
    std::size_t idx = 0;
    for (const auto& rn : win_.radial)
      for (const auto& an : win_.angular.nodes) {
        offs_[idx] = rn.x * std::exp(cplx(0.0, an.x));
        gw_[idx] = rn.w * an.w * rn.x * std::exp(log_norm - rn.x * rn.x / sigma2_);
        ++idx;
      }
  }

  void set_state(PointState st) {
    st_ = std::move(st);
    rebuild();
  }
  const PointState& state() const { return st_; }

  double hY() const { return hY_; }
  double sumH() const { return sumH_; }
  double er2() const { return er2_; }
  double G(double lambda) const { return mu1_ * hY_ + mud_ * sumH_ - lambda * er2_; }
  bool uses_cond() const { return mud_ > 0.0; }
  long evals() const { return evals_; }

  double eval_full(const PointState& st, double lambda) {
    ++evals_;
    const double hy = full_hY(st);
    double sh = 0.0;
    if (uses_cond())
      for (std::size_t k = 0; k < st.nr(); ++k) sh += st.p[k] * fresh_H(st, st.r[k]);
    return mu1_ * hy + mud_ * sh - lambda * st.er2();
  }

  double probe_r(std::size_t k, double nr, double lambda) {
    ++evals_;
    const double hy = hY_perturb_r(k, nr);
    double sh = sumH_;
    if (uses_cond()) sh += st_.p[k] * (fresh_H(st_, nr) - H_[k]);
    const double e2 = er2_ + st_.p[k] * (nr * nr - st_.r[k] * st_.r[k]);
    return mu1_ * hy + mud_ * sh - lambda * e2;
  }

  double probe_p(const std::vector<double>& np, double lambda) {
    ++evals_;
    double hy = 0.0;
    const std::size_t K = st_.nr();
    for (std::size_t n = 0; n < ynodes_.size(); ++n) {
      double f = 0.0;
      for (std::size_t k = 0; k < K; ++k) f += np[k] * K2d_[n * K + k];
      hy += ent_term(n, f);
    }
    double sh = 0.0;
    double e2 = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      if (uses_cond()) sh += np[k] * H_[k];
      e2 += np[k] * st_.r[k] * st_.r[k];
    }
    return mu1_ * hy + mud_ * sh - lambda * e2;
  }

  double probe_q(const std::vector<double>& nq, double lambda) {
    ++evals_;
    const std::size_t K = st_.nr();
    const std::size_t M = st_.nx();
    double hy = 0.0;
    for (std::size_t n = 0; n < ynodes_.size(); ++n) {
      double f = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double* row = &comp2d_[(n * K + k) * M];
        double kk = 0.0;
        for (std::size_t m = 0; m < M; ++m) kk += nq[m] * row[m];
        f += st_.p[k] * kk;
      }
      hy += ent_term(n, f);
    }
    double sh = 0.0;
    if (uses_cond()) {
      for (std::size_t k = 0; k < K; ++k) {
        double hk = 0.0;
        for (std::size_t mw = 0; mw < M; ++mw) {
          if (nq[mw] <= 0.0) continue;
          double acc = 0.0;
          const double* vbase = &V_[((k * M + mw) * n_win_) * M];
          for (std::size_t n = 0; n < n_win_; ++n) {
            const double* vr = vbase + n * M;
            double f = 0.0;
            for (std::size_t j = 0; j < M; ++j) f += nq[j] * vr[j];
            acc -= gw_[n] * std::log(f);
          }
          hk += nq[mw] * acc;
        }
        sh += st_.p[k] * hk;
      }
    }
    return mu1_ * hy + mud_ * sh - lambda * er2_;
  }

  double probe_x(std::size_t m, cplx nx, double lambda) {
    ++evals_;
    const std::size_t K = st_.nr();
    const std::size_t M = st_.nx();
    const double ng = std::abs(params_.a + nx);
    double hy = 0.0;
    for (std::size_t n = 0; n < ynodes_.size(); ++n) {
      const double rho = ynodes_[n].x;
      double f = fy_lin_[n];
      for (std::size_t k = 0; k < K; ++k) {
        const double oldc = comp2d_[(n * K + k) * M + m];
        f += st_.p[k] * st_.q[m] * (ring2d(rho, ng * st_.r[k], sigma2_) - oldc);
      }
      hy += ent_term(n, f);
    }
    double sh = sumH_;
    if (uses_cond()) {
      sh = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const cplx nz = (params_.a + nx) * st_.r[k];
        double hk = 0.0;
        for (std::size_t mw = 0; mw < M; ++mw) {
          if (st_.q[mw] <= 0.0) continue;
          double acc = 0.0;
          if (mw == m) {
            for (std::size_t n = 0; n < n_win_; ++n) {
              const cplx y = nz + offs_[n];
              double f = 0.0;
              for (std::size_t j = 0; j < M; ++j) {
                const cplx zj = (j == m) ? nz : z_[k * M + j];
                f += st_.q[j] * gauss2d(y - zj, sigma2_);
              }
              acc -= gw_[n] * std::log(f);
            }
          } else {
            const double* sbase = &S_[(k * M + mw) * n_win_];
            const double* vbase = &V_[((k * M + mw) * n_win_) * M];
            const cplx zw = z_[k * M + mw];
            for (std::size_t n = 0; n < n_win_; ++n) {
              const cplx y = zw + offs_[n];
              const double f = sbase[n] + st_.q[m] * (gauss2d(y - nz, sigma2_) - vbase[n * M + m]);
              acc -= gw_[n] * std::log(f);
            }
          }
          hk += st_.q[mw] * acc;
        }
        sh += st_.p[k] * hk;
      }
    }
    return mu1_ * hy + mud_ * sh - lambda * er2_;
  }

  // Fixed-phase conditional entropy at amplitude r for the current BD state.
  double fresh_H(const PointState& st, double r) const {
    const std::size_t M = st.nx();
    std::vector<cplx> z(M);
    for (std::size_t m = 0; m < M; ++m) z[m] = (params_.a + st.x[m]) * r;
    double h = 0.0;
    for (std::size_t mw = 0; mw < M; ++mw) {
      if (st.q[mw] <= 0.0) continue;
      double acc = 0.0;
      for (std::size_t n = 0; n < n_win_; ++n) {
        const cplx y = z[mw] + offs_[n];
        double f = 0.0;
        for (std::size_t j = 0; j < M; ++j) f += st.q[j] * gauss2d(y - z[j], sigma2_);
        acc -= gw_[n] * std::log(f);
      }
      h += st.q[mw] * acc;
    }
    return h;
  }

 private:
  inline double ent_term(std::size_t n, double f) const {
    if (f <= 0.0) return 0.0;
    return -ynodes_[n].w * 2.0 * M_PI * ynodes_[n].x * f * std::log(f);
  }

  double full_hY(const PointState& st) const {
    std::vector<double> centers;
    centers.reserve(st.nr() * st.nx());
    for (double rk : st.r)
      for (const cplx& xm : st.x) centers.push_back(std::abs(params_.a + xm) * rk);
    const RadialRule rule =
        engine::build_windowed_radial_rule(centers, std::sqrt(sigma2_), cfg_, 1);
    double hy = 0.0;
    for (const auto& node : rule.nodes) {
      double f = 0.0;
      for (std::size_t k = 0; k < st.nr(); ++k) {
        double kk = 0.0;
        for (std::size_t m = 0; m < st.nx(); ++m)
          kk += st.q[m] * ring2d(node.x, std::abs(params_.a + st.x[m]) * st.r[k], sigma2_);
        f += st.p[k] * kk;
      }
      if (f > 0.0) hy -= node.w * 2.0 * M_PI * node.x * f * std::log(f);
    }
    return hy;
  }

  double hY_perturb_r(std::size_t k, double nr) const {
    const std::size_t K = st_.nr();
    const std::size_t M = st_.nx();
    double hy = 0.0;
    for (std::size_t n = 0; n < ynodes_.size(); ++n) {
      const double rho = ynodes_[n].x;
      double nk = 0.0;
      for (std::size_t m = 0; m < M; ++m)
        nk += st_.q[m] * ring2d(rho, gains_[m] * nr, sigma2_);
      const double f = fy_lin_[n] + st_.p[k] * (nk - K2d_[n * K + k]);
      hy += ent_term(n, f);
    }
    return hy;
  }

  void rebuild() {
    const std::size_t K = st_.nr();
    const std::size_t M = st_.nx();
    gains_.resize(M);
    for (std::size_t m = 0; m < M; ++m) gains_[m] = std::abs(params_.a + st_.x[m]);

    std::vector<double> centers;
    centers.reserve(K * M);
    for (double rk : st_.r)
      for (double g : gains_) centers.push_back(g * rk);
    const RadialRule rule =
        engine::build_windowed_radial_rule(centers, std::sqrt(sigma2_), cfg_, 1);
    ynodes_ = rule.nodes;

    const std::size_t N = ynodes_.size();
    comp2d_.assign(N * K * M, 0.0);
    K2d_.assign(N * K, 0.0);
    fy_lin_.assign(N, 0.0);
    hY_ = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const double rho = ynodes_[n].x;
      double f = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        double kk = 0.0;
        for (std::size_t m = 0; m < M; ++m) {
          const double v = ring2d(rho, gains_[m] * st_.r[k], sigma2_);
          comp2d_[(n * K + k) * M + m] = v;
          kk += st_.q[m] * v;
        }
        K2d_[n * K + k] = kk;
        f += st_.p[k] * kk;
      }
      fy_lin_[n] = f;
      hY_ += ent_term(n, f);
    }

    er2_ = st_.er2();
    H_.assign(K, 0.0);
    sumH_ = 0.0;
    if (uses_cond()) {
      z_.resize(K * M);
      V_.assign(K * M * n_win_ * M, 0.0);
      S_.assign(K * M * n_win_, 0.0);
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t m = 0; m < M; ++m) z_[k * M + m] = (params_.a + st_.x[m]) * st_.r[k];
      for (std::size_t k = 0; k < K; ++k) {
        double hk = 0.0;
        for (std::size_t mw = 0; mw < M; ++mw) {
          double acc = 0.0;
          double* sbase = &S_[(k * M + mw) * n_win_];
          double* vbase = &V_[((k * M + mw) * n_win_) * M];
          const cplx zw = z_[k * M + mw];
          for (std::size_t n = 0; n < n_win_; ++n) {
            const cplx y = zw + offs_[n];
            double f = 0.0;
            for (std::size_t j = 0; j < M; ++j) {
              const double v = gauss2d(y - z_[k * M + j], sigma2_);
              vbase[n * M + j] = v;
              f += st_.q[j] * v;
            }
            sbase[n] = f;
            acc -= gw_[n] * std::log(f);
          }
          if (st_.q[mw] > 0.0) hk += st_.q[mw] * acc;
        }
        H_[k] = hk;
        sumH_ += st_.p[k] * hk;
      }
    }
  }

  ChannelParams params_;
  QuadConfig cfg_;
  double mu1_;
  double mud_;
  double sigma2_;

  engine::PolarWindow win_;
  std::size_t n_win_ = 0;
  std::vector<cplx> offs_;
  std::vector<double> gw_;

  PointState st_;
  std::vector<double> gains_;
  std::vector<QuadNode> ynodes_;
  std::vector<double> comp2d_;
  std::vector<double> K2d_;
  std::vector<double> fy_lin_;
  std::vector<cplx> z_;
  std::vector<double> V_;
  std::vector<double> S_;
  std::vector<double> H_;
  double hY_ = 0.0;
  double sumH_ = 0.0;
  double er2_ = 0.0;
  long evals_ = 0;
};

// --- block-coordinate ascent ------------------------------------------------

struct AscentSteps {
  double r;
  double x;
  double p;
  double q;
};

// Alternating blocks. Locations move along mass-normalized ("natural")
// directions so low-probability tail points equalize the marginal
// functional as fast as the bulk; probabilities take exponentiated-gradient
// steps, which handle the orders-of-magnitude spread on the tail masses.
class Ascender {
 public:
  Ascender(Eval& ev, const OptimConfig& ocfg, double scale)
      : ev_(ev), ocfg_(ocfg), scale_(scale), r_box_(1.2 * ocfg.grid_r_span * scale) {
    steps_ = {ocfg.step_init * scale, 0.5 * ocfg.step_init, 1.0, 1.0};
    h_loc_ = 1e-4 * std::max(1.0, scale);
  }

  int run(double lambda, int max_inner, int* total_inner = nullptr) {
    int it = 0;
    for (; it < max_inner; ++it) {
      const double before = ev_.G(lambda);
      bool moved = false;
      if (skip_r_ < 2) {
        if (block_r(lambda))
          moved = true;
        else
          ++skip_r_;
      }
      moved |= block_p(lambda);
      if (ev_.state().nx() > 0) {
        if (skip_x_ < 2) {
          if (block_x(lambda))
            moved = true;
          else
            ++skip_x_;
        }
        moved |= block_q(lambda);
      }
      const double after = ev_.G(lambda);
      if (!moved || after - before < ocfg_.convergence_tol * std::max(1.0, std::abs(after))) {
        ++it;
        break;
      }
    }
    if (total_inner != nullptr) *total_inner += it;
    return it;
  }

  // Re-enables skipped blocks and relaxes the step sizes; call after the
  // support or the multiplier changed.
  void reset(double step_scale = 1.0) {
    skip_r_ = 0;
    skip_x_ = 0;
    steps_.r = std::max(steps_.r, step_scale * 0.02 * scale_);
    steps_.x = std::max(steps_.x, step_scale * 0.02);
    steps_.p = std::max(steps_.p, 1.0);
    steps_.q = std::max(steps_.q, 1.0);
  }

  // Probability-only polish: equalizes the marginal functionals at fixed
  // locations and lambda (cheap; probes only re-weight cached values).
  void polish_probs(double lambda, int rounds) {
    for (int i = 0; i < rounds; ++i) {
      bool moved = block_p(lambda);
      if (ev_.state().nx() > 1) moved |= block_q(lambda);
      if (!moved) break;
    }
  }

 private:
  bool block_r(double lambda) {
    const auto& st = ev_.state();
    const std::size_t K = st.nr();
    std::vector<double> dir(K);
    double mx = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double lo = std::max(0.0, st.r[k] - h_loc_);
      const double g =
          (ev_.probe_r(k, st.r[k] + h_loc_, lambda) - ev_.probe_r(k, lo, lambda)) /
          (st.r[k] + h_loc_ - lo);
      dir[k] = g / std::max(st.p[k], 1e-4);
      mx = std::max(mx, std::abs(dir[k]));
    }
    if (mx < 1e-14) return false;
    const double base = ev_.G(lambda);
    double step = steps_.r;
    for (int half = 0; half < 6; ++half, step *= 0.5) {
      PointState cand = st;
      for (std::size_t k = 0; k < K; ++k)
        cand.r[k] = std::clamp(st.r[k] + step * dir[k] / mx, 0.0, r_box_);
      const double val = ev_.eval_full(cand, lambda);
      if (val > base + kTinyImprove) {
        ev_.set_state(std::move(cand));
        steps_.r = std::min(steps_.r * (half == 0 ? 1.4 : 0.7), scale_);
        return true;
      }
    }
    steps_.r = std::max(steps_.r * 0.25, 1e-7 * scale_);
    return false;
  }

  bool block_x(double lambda) {
    const auto& st = ev_.state();
    const std::size_t M = st.nx();
    std::vector<cplx> dir(M);
    double mx = 0.0;
    const double hx = 1e-4;
    for (std::size_t m = 0; m < M; ++m) {
      const double gre = (ev_.probe_x(m, st.x[m] + hx, lambda) -
                          ev_.probe_x(m, st.x[m] - hx, lambda)) /
                         (2.0 * hx);
      const double gim = (ev_.probe_x(m, st.x[m] + cplx(0.0, hx), lambda) -
                          ev_.probe_x(m, st.x[m] - cplx(0.0, hx), lambda)) /
                         (2.0 * hx);
      dir[m] = cplx(gre, gim) / std::max(st.q[m], 1e-4);
      mx = std::max(mx, std::abs(dir[m]));
    }
    if (mx < 1e-14) return false;
    const double base = ev_.G(lambda);
    double step = steps_.x;
    for (int half = 0; half < 6; ++half, step *= 0.5) {
      PointState cand = st;
      for (std::size_t m = 0; m < M; ++m)
        cand.x[m] = disk_project(st.x[m] + step * dir[m] / mx);
      const double val = ev_.eval_full(cand, lambda);
      if (val > base + kTinyImprove) {
        ev_.set_state(std::move(cand));
        steps_.x = std::min(steps_.x * (half == 0 ? 1.4 : 0.7), 0.5);
        return true;
      }
    }
    steps_.x = std::max(steps_.x * 0.25, 1e-8);
    return false;
  }

  bool block_p(double lambda) {
    const auto& st = ev_.state();
    const std::size_t K = st.nr();
    if (K < 2) return false;
    const double hp = 1e-5;
    std::vector<double> phi(K, 0.0);
    double phimax = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      if (st.p[k] <= 0.0) continue;
      std::vector<double> up = st.p;
      std::vector<double> dn = st.p;
      up[k] += hp;
      dn[k] = std::max(0.0, dn[k] - hp);
      phi[k] = (ev_.probe_p(up, lambda) - ev_.probe_p(dn, lambda)) / (up[k] - dn[k]);
      phimax = std::max(phimax, phi[k]);
    }
    if (!std::isfinite(phimax)) return false;
    const double base = ev_.G(lambda);
    double eta = steps_.p;
    for (int half = 0; half < 8; ++half, eta *= 0.5) {
      std::vector<double> cand(K, 0.0);
      double z = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        if (st.p[k] > 0.0) cand[k] = st.p[k] * std::exp(eta * (phi[k] - phimax));
        z += cand[k];
      }
      if (!(z > 0.0)) continue;
      for (auto& v : cand) v /= z;
      const double val = ev_.probe_p(cand, lambda);
      if (val > base + kTinyImprove) {
        PointState ns = st;
        ns.p = std::move(cand);
        ev_.set_state(std::move(ns));
        steps_.p = std::min(steps_.p * (half == 0 ? 1.4 : 0.7), 50.0);
        return true;
      }
    }
    steps_.p = std::max(steps_.p * 0.25, 1e-6);
    return false;
  }

  bool block_q(double lambda) {
    const auto& st = ev_.state();
    const std::size_t M = st.nx();
    if (M < 2) return false;
    const double hq = 1e-5;
    std::vector<double> phi(M, 0.0);
    double phimax = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < M; ++m) {
      if (st.q[m] <= 0.0) continue;
      std::vector<double> up = st.q;
      std::vector<double> dn = st.q;
      up[m] += hq;
      dn[m] = std::max(0.0, dn[m] - hq);
      phi[m] = (ev_.probe_q(up, lambda) - ev_.probe_q(dn, lambda)) / (up[m] - dn[m]);
      phimax = std::max(phimax, phi[m]);
    }
    if (!std::isfinite(phimax)) return false;
    const double base = ev_.G(lambda);
    double eta = steps_.q;
    for (int half = 0; half < 8; ++half, eta *= 0.5) {
      std::vector<double> cand(M, 0.0);
      double z = 0.0;
      for (std::size_t m = 0; m < M; ++m) {
        if (st.q[m] > 0.0) cand[m] = st.q[m] * std::exp(eta * (phi[m] - phimax));
        z += cand[m];
      }
      if (!(z > 0.0)) continue;
      for (auto& v : cand) v /= z;
      const double val = ev_.probe_q(cand, lambda);
      if (val > base + kTinyImprove) {
        PointState ns = st;
        ns.q = std::move(cand);
        ev_.set_state(std::move(ns));
        steps_.q = std::min(steps_.q * (half == 0 ? 1.4 : 0.7), 50.0);
        return true;
      }
    }
    steps_.q = std::max(steps_.q * 0.25, 1e-6);
    return false;
  }

  Eval& ev_;
  const OptimConfig& ocfg_;
  double scale_;
  double r_box_;
  AscentSteps steps_;
  double h_loc_;
  int skip_r_ = 0;
  int skip_x_ = 0;
};

// Dual update for the power constraint: ascend the lambda-penalized
// objective and bisect lambda on the residual E[r^2] - P, finishing with an
// exact amplitude rescale so the budget is met with equality. A previous
// lambda, when available, seeds a tight bracket; bisect_iters controls how
// hard the multiplier is refined (cheap refreshes between insertions).
double solve_lambda(Eval& ev, Ascender& asc, const ChannelParams& params, const OptimConfig& ocfg,
                    double lambda_guess, int bisect_iters, int* total_inner) {
  const double P = params.P;
  const int quick = std::max(4, ocfg.max_inner / 3);
  double lo = 0.0;
  double hi;
  if (lambda_guess > 0.0) {
    asc.reset(0.5);
    asc.run(lambda_guess, quick, total_inner);
    if (ev.er2() > P) {
      lo = lambda_guess;
      hi = 1.6 * lambda_guess;
      for (int i = 0; i < 40; ++i) {
        asc.run(hi, quick, total_inner);
        if (ev.er2() <= P) break;
        lo = hi;
        hi *= 1.6;
      }
    } else {
      hi = lambda_guess;
      double probe = lambda_guess / 1.6;
      for (int i = 0; i < 40 && probe > 1e-12; ++i) {
        asc.run(probe, quick, total_inner);
        if (ev.er2() > P) {
          lo = probe;
          break;
        }
        hi = probe;
        probe /= 1.6;
      }
      if (ev.er2() <= P && lo == 0.0 && hi < 1e-11) {
        asc.run(0.0, ocfg.max_inner, total_inner);
        if (ev.er2() <= P) return 0.0;  // effectively unconstrained
      }
    }
  } else {
    asc.run(0.0, quick, total_inner);
    if (ev.er2() < 0.98 * P) {
      asc.run(0.0, ocfg.max_inner, total_inner);
      if (ev.er2() <= P) return 0.0;
    }
    hi = 1e-3;
    for (int i = 0; i < 48; ++i) {
      asc.run(hi, quick, total_inner);
      if (ev.er2() <= P) break;
      lo = hi;
      hi *= 2.0;
    }
  }
  for (int it = 0; it < bisect_iters; ++it) {
    const double mid = 0.5 * (lo + hi);
    asc.run(mid, quick, total_inner);
    if (ev.er2() > P)
      lo = mid;
    else
      hi = mid;
  }
  asc.run(hi, ocfg.max_inner, total_inner);
  const double e2 = ev.er2();
  if (e2 > 0.5 * P && std::abs(e2 - P) > 1e-14 * P) {
    const double s = std::sqrt(P / e2);
    PointState st = ev.state();
    for (auto& rv : st.r) rv *= s;
    ev.set_state(std::move(st));
  }
  return hi;
}

// --- KKT scan machinery -----------------------------------------------------

struct ScanContext {
  LogFyTable table;
  std::vector<double> gains;   // |a + x_m|
  std::vector<double> gain_w;  // q_m
  std::vector<GaussMixture2D> cond;  // per r_k, fixed phase
  engine::PolarWindow win;
  double sigma2 = 0.0;
};

ScanContext make_scan_context(const PointState& st, const ChannelParams& params,
                              const QuadConfig& cfg, double r_grid_max) {
  ScanContext sc;
  sc.sigma2 = params.sigma2;
  const double sigma = std::sqrt(params.sigma2);
  RadialMixture mix;
  mix.sigma2 = params.sigma2;
  for (std::size_t k = 0; k < st.nr(); ++k) {
    const double logp = std::log(std::max(st.p[k], 1e-300));
    for (std::size_t m = 0; m < st.nx(); ++m) {
      mix.c.push_back(std::abs(params.a + st.x[m]) * st.r[k]);
      mix.logw.push_back(logp + std::log(std::max(st.q[m], 1e-300)));
    }
  }
  double r_support_max = 0.0;
  for (double rv : st.r) r_support_max = std::max(r_support_max, rv);
  const double reach = (1.0 + std::abs(params.a)) * std::max(r_grid_max, r_support_max) +
                       (cfg.radial_cutoff_sigmas + 3.0) * sigma;
  const int n = std::max(1024, static_cast<int>(64.0 * reach / sigma));
  sc.table = LogFyTable(mix, reach, std::min(n, 1 << 17));
  sc.gains.resize(st.nx());
  sc.gain_w.resize(st.nx());
  for (std::size_t m = 0; m < st.nx(); ++m) {
    sc.gains[m] = std::abs(params.a + st.x[m]);
    sc.gain_w[m] = st.q[m];
  }
  sc.cond.reserve(st.nr());
  for (std::size_t k = 0; k < st.nr(); ++k) {
    GaussMixture2D gm;
    gm.sigma2 = params.sigma2;
    for (std::size_t m = 0; m < st.nx(); ++m) {
      gm.z.push_back((params.a + st.x[m]) * st.r[k]);
      gm.logq.push_back(std::log(std::max(st.q[m], 1e-300)));
    }
    sc.cond.push_back(std::move(gm));
  }
  sc.win = engine::build_polar_window(cfg, params.sigma2, 1);
  return sc;
}

double omega1_tab(const ScanContext& sc, double r, const QuadConfig& cfg) {
  std::vector<double> centers(sc.gains.size());
  for (std::size_t i = 0; i < sc.gains.size(); ++i) centers[i] = sc.gains[i] * r;
  const RadialRule rule =
      engine::build_windowed_radial_rule(centers, std::sqrt(sc.sigma2), cfg, 1);
  double s = 0.0;
  for (const auto& node : rule.nodes) {
    double k = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i)
      k += sc.gain_w[i] * ring_density(node.x, centers[i], sc.sigma2);
    if (k > 0.0) s -= node.w * k * sc.table(node.x);
  }
  return s;
}

double omega2_tab(const ScanContext& sc, cplx x2, const PointState& st, const Weights& w,
                  const ChannelParams& params) {
  const double mu_diff = w.mu2 - w.mu1;
  const double log_norm = -std::log(M_PI * params.sigma2);
  double total = 0.0;
  for (std::size_t k = 0; k < st.nr(); ++k) {
    const cplx center = (params.a + x2) * st.r[k];
    double term = 0.0;
    std::size_t idx = 0;
    for (const auto& rn : sc.win.radial) {
      for (const auto& an : sc.win.angular.nodes) {
        const double rho = rn.x;
        const double wgt = rn.w * an.w * rho * std::exp(log_norm - rho * rho / params.sigma2);
        const cplx y = center + rho * std::exp(cplx(0.0, an.x));
        double kern = w.mu1 * sc.table(std::abs(y));
        if (mu_diff != 0.0) kern += mu_diff * sc.cond[k].log_density(y);
        term -= wgt * kern;
        ++idx;
      }
    }
    (void)idx;
    total += st.p[k] * term;
  }
  return total;
}

struct RScan {
  double residual = 0.0;
  double arg = 0.0;
  double level = 0.0;
  double spread = 0.0;
  double lambda_fit = 0.0;
};

// Scans L(r) = omega1 + (mu2/mu1 - 1) H - (lambda/mu1) r^2 over the grid.
// lambda is re-fitted from the support stationarity (weighted regression of
// the unscaled functional against r^2) before the scan.
RScan scan_r(const ScanContext& sc, const PointState& st, const Weights& w,
             const ChannelParams& params, const QuadConfig& cfg, double lambda_bisect,
             int n_grid, double r_max, const BdDistribution& bd) {
  RScan out;
  const double mu1 = w.mu1;
  const double mud = w.mu2 - w.mu1;
  const std::size_t K = st.nr();

  std::vector<double> phi(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double o1 = omega1_tab(sc, st.r[k], cfg);
    const double H = mud != 0.0 ? cond_entropy_given_r(st.r[k], bd, params, cfg, 1) : 0.0;
    phi[k] = mu1 * o1 + mud * H;
  }

  // lambda from the support: phi_k = const + lambda r_k^2 at stationarity.
  double lambda = lambda_bisect;
  if (K >= 2) {
    double mr2 = 0.0;
    double mphi = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      mr2 += st.p[k] * st.r[k] * st.r[k];
      mphi += st.p[k] * phi[k];
    }
    double cov = 0.0;
    double var = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double dr = st.r[k] * st.r[k] - mr2;
      cov += st.p[k] * dr * (phi[k] - mphi);
      var += st.p[k] * dr * dr;
    }
    if (var > 1e-12) lambda = std::max(0.0, cov / var);
  }
  out.lambda_fit = lambda;

  std::vector<double> L_support(K);
  double level = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    L_support[k] = (phi[k] - lambda * st.r[k] * st.r[k]) / mu1;
    level += st.p[k] * L_support[k];
  }
  out.level = level;
  for (std::size_t k = 0; k < K; ++k)
    out.spread = std::max(out.spread, std::abs(L_support[k] - level));

  std::vector<double> Lg(static_cast<std::size_t>(n_grid));
  kernels::indexed_fill(Lg.size(), Lg, [&](std::size_t i) {
    const double r = r_max * static_cast<double>(i) / static_cast<double>(n_grid - 1);
    const double o1 = omega1_tab(sc, r, cfg);
    const double H = mud != 0.0 ? cond_entropy_given_r(r, bd, params, cfg, 1) : 0.0;
    return (mu1 * o1 + mud * H - lambda * r * r) / mu1;
  });
  out.residual = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < Lg.size(); ++i) {
    const double v = Lg[i] - level;
    if (v > out.residual) {
      out.residual = v;
      out.arg = r_max * static_cast<double>(i) / static_cast<double>(n_grid - 1);
    }
  }
  return out;
}

struct X2Scan {
  double residual = 0.0;
  cplx arg;
  double level = 0.0;
  double spread = 0.0;
  std::string cluster;
};

X2Scan scan_x2(const ScanContext& sc, const PointState& st, const Weights& w,
               const ChannelParams& params, int n_radii, int n_angles,
               std::vector<std::pair<cplx, double>>* grid_out = nullptr) {
  X2Scan out;
  std::vector<double> om_support(st.nx());
  double level = 0.0;
  for (std::size_t m = 0; m < st.nx(); ++m) {
    om_support[m] = omega2_tab(sc, st.x[m], st, w, params);
    level += st.q[m] * om_support[m];
  }
  out.level = level;
  for (std::size_t m = 0; m < st.nx(); ++m)
    out.spread = std::max(out.spread, std::abs(om_support[m] - level));

  struct GridPt {
    cplx x;
    double v = 0.0;
  };
  std::vector<GridPt> grid;
  grid.push_back({cplx(0.0, 0.0), 0.0});
  for (int j = 1; j < n_radii; ++j) {
    const double rho = static_cast<double>(j) / static_cast<double>(n_radii - 1);
    for (int t = 0; t < n_angles; ++t) {
      const double th = 2.0 * M_PI * t / n_angles - M_PI;
      grid.push_back({rho * std::exp(cplx(0.0, th)), 0.0});
    }
  }
  std::vector<double> vals(grid.size());
  kernels::indexed_fill(vals.size(), vals, [&](std::size_t i) {
    return omega2_tab(sc, grid[i].x, st, w, params);
  });
  out.residual = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> violators;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid_out != nullptr) grid_out->emplace_back(grid[i].x, vals[i]);
    const double v = vals[i] - level;
    if (v > out.residual) {
      out.residual = v;
      out.arg = grid[i].x;
    }
    if (v > 0.0) violators.push_back(i);
  }
  // Geometric diagnostic: violations concentrated on a circle about -a
  // (the h(Y) symmetry) or about 0 (the h(Y|X1) symmetry).
  if (violators.size() >= 3) {
    double m_a = 0.0;
    double m_0 = 0.0;
    for (auto i : violators) {
      m_a += std::abs(grid[i].x + params.a);
      m_0 += std::abs(grid[i].x);
    }
    m_a /= static_cast<double>(violators.size());
    m_0 /= static_cast<double>(violators.size());
    double v_a = 0.0;
    double v_0 = 0.0;
    for (auto i : violators) {
      v_a += std::pow(std::abs(grid[i].x + params.a) - m_a, 2);
      v_0 += std::pow(std::abs(grid[i].x) - m_0, 2);
    }
    out.cluster = v_a < v_0 ? "circle about -a" : "circle about 0";
  } else {
    out.cluster = "none";
  }
  return out;
}

// --- weighted solve ---------------------------------------------------------

PointState default_init(const ChannelParams& params, int n_r, int n_x2) {
  PointState st;
  for (int j = 0; j < n_r; ++j) {
    const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(n_r);
    st.r.push_back(std::sqrt(-params.P * std::log1p(-u)));
    st.p.push_back(1.0 / static_cast<double>(n_r));
  }
  const int ring_pts = n_x2 - 1;
  for (int j = 0; j < ring_pts; ++j) {
    const double th = 2.0 * M_PI * j / ring_pts + 0.3;
    st.x.push_back(std::exp(cplx(0.0, th)));
    st.q.push_back(1.0 / static_cast<double>(n_x2));
  }
  st.x.push_back(cplx(sgn(params.a), 0.0));
  st.q.push_back(1.0 / static_cast<double>(n_x2));
  return st;
}

PointState jitter_state(PointState st, const ChannelParams& params, std::uint64_t seed,
                        std::uint64_t restart) {
  if (restart == 0) return st;
  const mc::CounterRng rng(seed, 1000 + restart);
  std::uint64_t c = 0;
  for (auto& rv : st.r) rv = std::max(0.0, rv * (1.0 + 0.1 * (2.0 * rng.uniform(c++) - 1.0)));
  for (auto& xv : st.x) {
    const double fre = 1.0 + 0.1 * (2.0 * rng.uniform(c++) - 1.0);
    const double fim = 0.1 * (2.0 * rng.uniform(c++) - 1.0);
    xv = disk_project(cplx(xv.real() * fre - xv.imag() * fim, xv.imag() * fre + xv.real() * fim));
  }
  // keep power feasible after jitter
  double e2 = st.er2();
  if (e2 > params.P) {
    const double s = std::sqrt(params.P / e2);
    for (auto& rv : st.r) rv *= s;
  }
  return st;
}

struct RunResult {
  PointState state;
  double lambda = 0.0;
  double G = 0.0;
  bool converged = false;
  double kkt_r = 0.0;
  double kkt_x2 = 0.0;
  SolveDiagnostics diag;
};

RunResult run_one(const ChannelParams& params, const Weights& w, const QuadConfig& cfg,
                  const OptimConfig& ocfg, PointState init) {
  const double scale = std::sqrt(params.P);
  Eval ev(params, w, cfg);
  ev.set_state(merge_prune(init));
  Ascender asc(ev, ocfg, scale);

  RunResult res;
  double lambda = 0.0;
  const double r_grid_max = ocfg.grid_r_span * scale;
  const int coarse_r = std::max(200, ocfg.grid_r_points / 2);
  const int coarse_radii = std::max(8, ocfg.grid_x2_radii / 2);
  const int coarse_angles = std::max(16, ocfg.grid_x2_angles / 2);

  auto try_insert = [&](const RScan& sr, const X2Scan& sx) {
    bool inserted = false;
    PointState grown = ev.state();
    if (sr.residual > ocfg.kkt_tol &&
        grown.nr() < static_cast<std::size_t>(ocfg.max_points_r)) {
      double min_gap = std::numeric_limits<double>::infinity();
      for (double rv : grown.r) min_gap = std::min(min_gap, std::abs(rv - sr.arg));
      if (min_gap > 0.02 * scale) {
        for (auto& pv : grown.p) pv *= 1.0 - 1e-3;
        grown.r.push_back(sr.arg);
        grown.p.push_back(1e-3);
        inserted = true;
      }
    }
    if (sx.residual > ocfg.kkt_tol &&
        grown.nx() < static_cast<std::size_t>(ocfg.max_points_x2)) {
      double min_gap = std::numeric_limits<double>::infinity();
      for (const auto& xv : grown.x) min_gap = std::min(min_gap, std::abs(xv - sx.arg));
      if (min_gap > 0.02) {
        for (auto& qv : grown.q) qv *= 1.0 - 1e-3;
        grown.x.push_back(disk_project(sx.arg));
        grown.q.push_back(1e-3);
        inserted = true;
      }
    }
    if (inserted) {
      ev.set_state(std::move(grown));
      asc.reset();
    }
    return inserted;
  };

  for (int outer = 0; outer < ocfg.max_outer && !res.converged; ++outer) {
    ++res.diag.outer_cycles;
    const int bisect = outer % 3 == 0 ? 10 : 3;
    lambda = solve_lambda(ev, asc, params, ocfg, lambda, bisect, &res.diag.inner_iterations);
    asc.polish_probs(lambda, 25);
    {
      PointState merged = merge_prune(ev.state());
      if (merged.nr() != ev.state().nr() || merged.nx() != ev.state().nx()) {
        ev.set_state(std::move(merged));
        asc.reset();
      }
    }

    // Insertion rounds at (approximately) fixed multiplier: grow the
    // support at the worst violation and re-equalize, several times per
    // cycle so the tail cascade fills in quickly.
    for (int round = 0; round < 4; ++round) {
      const PointState& st = ev.state();
      const BdDistribution bd = to_bd_points(st);
      ScanContext sc = make_scan_context(st, params, cfg, r_grid_max);
      const RScan sr = scan_r(sc, st, w, params, cfg, lambda, coarse_r, r_grid_max, bd);
      const X2Scan sx = scan_x2(sc, st, w, params, coarse_radii, coarse_angles);
      lambda = sr.lambda_fit;
      if (sr.residual <= ocfg.kkt_tol && sx.residual <= ocfg.kkt_tol) {
        res.converged = true;
        break;
      }
      if (!try_insert(sr, sx)) break;
      asc.run(lambda, ocfg.max_inner, &res.diag.inner_iterations);
      asc.polish_probs(lambda, 25);
      PointState merged = merge_prune(ev.state());
      if (merged.nr() != ev.state().nr() || merged.nx() != ev.state().nx()) {
        ev.set_state(std::move(merged));
        asc.reset();
      }
    }
  }

  // Feasibility projection before verification (merges renormalize masses).
  if (ev.er2() > params.P) {
    PointState fixed = ev.state();
    const double s = std::sqrt(params.P / ev.er2());
    for (auto& rv : fixed.r) rv *= s;
    ev.set_state(std::move(fixed));
  }

  // Final verification on the full grids.
  const PointState& st = ev.state();
  const BdDistribution bd = to_bd_points(st);
  ScanContext sc = make_scan_context(st, params, cfg, r_grid_max);
  const RScan sr = scan_r(sc, st, w, params, cfg, lambda, ocfg.grid_r_points, r_grid_max, bd);
  const X2Scan sx = scan_x2(sc, st, w, params, ocfg.grid_x2_radii, ocfg.grid_x2_angles);
  res.state = st;
  res.lambda = sr.lambda_fit;
  res.kkt_r = sr.residual;
  res.kkt_x2 = sx.residual;
  res.converged = sr.residual <= ocfg.kkt_tol && sx.residual <= ocfg.kkt_tol;
  res.G = ev.G(0.0);
  res.diag.objective_evals = ev.evals();
  return res;
}

BoundarySolution finalize_solution(const ChannelParams& params, const Weights& w,
                                   const QuadConfig& cfg, const RunResult& run) {
  BoundarySolution sol;
  sol.weights = w;
  sol.f_r = normalize_and_merge(to_radial_pmf(run.state));
  sol.f_x2 = normalize_and_merge(to_bd_points(run.state));
  const MutualInfos mi = mutual_infos(sol.f_r, sol.f_x2, params, cfg, EvalMode::fast);
  sol.rates.R1 = nats_to_bits(std::max(0.0, mi.I_x1_y));
  sol.rates.R2 = nats_to_bits(std::max(0.0, mi.I_x2_y_given_x1));
  sol.objective_nats = w.mu1 * std::max(0.0, mi.I_x1_y) + w.mu2 * std::max(0.0, mi.I_x2_y_given_x1);
  sol.lambda = run.lambda;
  sol.kkt_residual_r = run.kkt_r;
  sol.kkt_residual_x2 = run.kkt_x2;
  sol.converged = run.converged;
  sol.diagnostics = run.diag;
  return sol;
}

// --- concentric-circle solver for mu1 = 0 -----------------------------------

struct RingState {
  std::vector<double> rho;
  std::vector<double> q;
};

RadialMixture ring_mixture(const RingState& st, double sp, double sigma2) {
  RadialMixture mix;
  mix.sigma2 = sigma2;
  for (std::size_t m = 0; m < st.rho.size(); ++m) {
    mix.c.push_back(st.rho[m] * sp);
    mix.logw.push_back(std::log(std::max(st.q[m], 1e-300)));
  }
  return mix;
}

double ring_objective(const RingState& st, double sp, const ChannelParams& params,
                      const QuadConfig& cfg) {
  return engine::radial_mixture_entropy(ring_mixture(st, sp, params.sigma2), cfg, 1) -
         gaussian_entropy_nats(params.sigma2);
}

// Marginal functional of a candidate ring: cross-entropy of its noisy ring
// density against the current conditional mixture.
double ring_marginal(double rho, const RingState& st, double sp, const ChannelParams& params,
                     const QuadConfig& cfg) {
  const RadialMixture mix = ring_mixture(st, sp, params.sigma2);
  const double c = rho * sp;
  const RadialRule rule =
      engine::build_windowed_radial_rule({c}, std::sqrt(params.sigma2), cfg, 1);
  double s = 0.0;
  for (const auto& node : rule.nodes) {
    const double k = ring_density(node.x, c, params.sigma2);
    if (k > 0.0) s -= node.w * k * mix.log_density_2d(node.x);
  }
  return s - gaussian_entropy_nats(params.sigma2);
}

struct RingRun {
  RingState state;
  double objective = 0.0;  // nats
  double residual = 0.0;
  bool converged = false;
  SolveDiagnostics diag;
};

RingRun run_rings(const ChannelParams& params, const QuadConfig& cfg, const OptimConfig& ocfg,
                  RingState init) {
  const double sp = std::sqrt(params.P);
  RingState st = std::move(init);
  RingRun out;
  const int n_scan = 256;

  auto merge_rings = [&](RingState s) {
    BdConcentricCircles cc;
    for (std::size_t m = 0; m < s.rho.size(); ++m) cc.rings.push_back({s.rho[m], s.q[m]});
    const BdDistribution merged = normalize_and_merge(BdDistribution{cc});
    RingState ns;
    for (const auto& rg : merged.circles().rings) {
      ns.rho.push_back(rg.rho);
      ns.q.push_back(rg.q);
    }
    return ns;
  };

  double step_rho = 0.1;
  double step_q = 0.1;
  for (int outer = 0; outer < ocfg.max_outer; ++outer) {
    ++out.diag.outer_cycles;
    for (int inner = 0; inner < ocfg.max_inner; ++inner) {
      ++out.diag.inner_iterations;
      const double base = ring_objective(st, sp, params, cfg);
      bool moved = false;
      // radius block
      {
        const double h = 1e-5;
        std::vector<double> grad(st.rho.size());
        for (std::size_t m = 0; m < st.rho.size(); ++m) {
          RingState up = st;
          RingState dn = st;
          up.rho[m] = std::min(1.0, up.rho[m] + h);
          dn.rho[m] = std::max(0.0, dn.rho[m] - h);
          grad[m] = (ring_objective(up, sp, params, cfg) - ring_objective(dn, sp, params, cfg)) /
                    (up.rho[m] - dn.rho[m]);
          out.diag.objective_evals += 2;
        }
        double norm = 0.0;
        for (double g : grad) norm += g * g;
        norm = std::sqrt(norm);
        if (norm > 1e-14) {
          double stp = step_rho;
          for (int half = 0; half < 6; ++half, stp *= 0.5) {
            RingState cand = st;
            for (std::size_t m = 0; m < cand.rho.size(); ++m)
              cand.rho[m] = std::clamp(st.rho[m] + stp * grad[m] / norm, 0.0, 1.0);
            ++out.diag.objective_evals;
            if (ring_objective(cand, sp, params, cfg) > base + kTinyImprove) {
              st = std::move(cand);
              step_rho = std::min(step_rho * (half == 0 ? 1.5 : 0.7), 0.5);
              moved = true;
              break;
            }
          }
          if (!moved) step_rho = std::max(step_rho * 0.25, 1e-8);
        }
      }
      // probability block
      if (st.q.size() >= 2) {
        const double base2 = ring_objective(st, sp, params, cfg);
        const double h = 1e-6;
        std::vector<double> grad(st.q.size());
        for (std::size_t m = 0; m < st.q.size(); ++m) {
          RingState up = st;
          RingState dn = st;
          up.q[m] += h;
          dn.q[m] = std::max(0.0, dn.q[m] - h);
          grad[m] = (ring_objective(up, sp, params, cfg) - ring_objective(dn, sp, params, cfg)) /
                    (up.q[m] - dn.q[m]);
          out.diag.objective_evals += 2;
        }
        double stp = step_q;
        bool ok = false;
        for (int half = 0; half < 8; ++half, stp *= 0.5) {
          RingState cand = st;
          std::vector<double> nq(st.q.size());
          for (std::size_t m = 0; m < st.q.size(); ++m) nq[m] = st.q[m] + stp * grad[m];
          cand.q = project_simplex(std::move(nq));
          ++out.diag.objective_evals;
          if (ring_objective(cand, sp, params, cfg) > base2 + kTinyImprove) {
            st = std::move(cand);
            step_q = std::min(step_q * (half == 0 ? 1.5 : 0.7), 10.0);
            ok = true;
            break;
          }
        }
        if (!ok) step_q = std::max(step_q * 0.25, 1e-9);
        moved = moved || ok;
      }
      const double after = ring_objective(st, sp, params, cfg);
      if (!moved || after - base < ocfg.convergence_tol * std::max(1.0, std::abs(after))) break;
    }

    st = merge_rings(st);
    // ring-radius KKT scan on [0, 1]
    double level = 0.0;
    for (std::size_t m = 0; m < st.rho.size(); ++m)
      level += st.q[m] * ring_marginal(st.rho[m], st, sp, params, cfg);
    double worst = -std::numeric_limits<double>::infinity();
    double arg = 0.0;
    for (int i = 0; i < n_scan; ++i) {
      const double rho = static_cast<double>(i) / (n_scan - 1);
      const double v = ring_marginal(rho, st, sp, params, cfg) - level;
      if (v > worst) {
        worst = v;
        arg = rho;
      }
    }
    out.residual = worst;
    if (worst <= ocfg.kkt_tol) {
      out.converged = true;
      break;
    }
    double min_gap = std::numeric_limits<double>::infinity();
    for (double rv : st.rho) min_gap = std::min(min_gap, std::abs(rv - arg));
    if (min_gap > 0.02 && st.rho.size() < static_cast<std::size_t>(ocfg.max_points_x2)) {
      for (auto& qv : st.q) qv *= 1.0 - 1e-3;
      st.rho.push_back(arg);
      st.q.push_back(1e-3);
    } else if (outer + 1 >= ocfg.max_outer) {
      break;
    }
  }
  out.state = merge_rings(st);
  out.objective = ring_objective(out.state, sp, params, cfg);
  return out;
}

BoundarySolution solve_bd_max_impl(const ChannelParams& params, const QuadConfig& cfg,
                                   const OptimConfig& ocfg, const Weights& w) {
  params.check();
  cfg.check();
  ocfg.check();
  RingRun best;
  bool have = false;
  for (int restart = 0; restart < ocfg.restarts; ++restart) {
    RingState init;
    if (restart == 0) {
      init.rho = {1.0};
      init.q = {1.0};
    } else {
      const mc::CounterRng rng(ocfg.seed, 2000 + static_cast<std::uint64_t>(restart));
      const int n = 1 + restart;
      for (int j = 0; j < n; ++j) {
        init.rho.push_back(std::clamp(
            (static_cast<double>(j) + 1.0) / n * (0.8 + 0.4 * rng.uniform(static_cast<std::uint64_t>(j))),
            0.0, 1.0));
        init.q.push_back(1.0 / n);
      }
    }
    RingRun run = run_rings(params, cfg, ocfg, std::move(init));
    run.diag.restarts_used = restart + 1;
    if (!have || run.objective > best.objective) {
      best = std::move(run);
      best.diag.restarts_used = restart + 1;
      have = true;
    }
  }

  BoundarySolution sol;
  sol.weights = w;
  sol.f_r = RadialPmf{{{std::sqrt(params.P), 1.0}}};
  BdConcentricCircles cc;
  for (std::size_t m = 0; m < best.state.rho.size(); ++m)
    cc.rings.push_back({best.state.rho[m], best.state.q[m]});
  sol.f_x2 = normalize_and_merge(BdDistribution{cc});
  const MutualInfos mi = mutual_infos(sol.f_r, sol.f_x2, params, cfg, EvalMode::fast);
  sol.rates.R1 = nats_to_bits(std::max(0.0, mi.I_x1_y));
  sol.rates.R2 = nats_to_bits(std::max(0.0, mi.I_x2_y_given_x1));
  sol.objective_nats = w.mu1 * std::max(0.0, mi.I_x1_y) + w.mu2 * std::max(0.0, mi.I_x2_y_given_x1);
  sol.lambda = 0.0;
  sol.kkt_residual_r = std::numeric_limits<double>::quiet_NaN();
  sol.kkt_residual_x2 = best.residual;
  sol.converged = best.converged;
  sol.diagnostics = best.diag;
  return sol;
}

}  // namespace

// --- public API -------------------------------------------------------------

BoundarySolution solve_weighted(const ChannelParams& params, const Weights& weights,
                                const QuadConfig& cfg, const OptimConfig& ocfg,
                                const BoundarySolution* warm_start) {
  params.check();
  weights.check();
  cfg.check();
  ocfg.check();

  if (weights.mu1 > weights.mu2) {
    // The optimum collapses to the sum-rate corner: a fixed reflector at
    // sign(a) and Gaussian PT signaling; returned analytically.
    BoundarySolution sol;
    sol.weights = weights;
    sol.f_r = to_radial_pmf(default_init(params, 12, 2));
    sol.f_x2 = BdDistribution{BdPointMasses{{{cplx(sgn(params.a), 0.0), 1.0}}}};
    sol.rates.R1 = c1(params);
    sol.rates.R2 = 0.0;
    sol.objective_nats = weights.mu1 * bits_to_nats(sol.rates.R1);
    const double g = 1.0 + std::abs(params.a);
    sol.lambda = weights.mu1 * g * g / (params.sigma2 + g * g * params.P);
    sol.converged = true;
    return sol;
  }

  if (weights.mu1 == 0.0) return solve_bd_max_impl(params, cfg, ocfg, weights);

  RunResult best;
  bool have = false;
  for (int restart = 0; restart < ocfg.restarts; ++restart) {
    PointState init;
    if (restart == 0 && warm_start != nullptr && warm_start->f_x2.is_points()) {
      for (const auto& pt : warm_start->f_r.points) {
        init.r.push_back(pt.r);
        init.p.push_back(pt.p);
      }
      for (const auto& pt : warm_start->f_x2.points().points) {
        init.x.push_back(pt.x);
        init.q.push_back(pt.q);
      }
    } else {
      init = jitter_state(default_init(params, 6, 6), params, ocfg.seed,
                          static_cast<std::uint64_t>(restart));
    }
    RunResult run = run_one(params, weights, cfg, ocfg, std::move(init));
    run.diag.restarts_used = restart + 1;
    const bool better = !have || (run.converged && !best.converged) ||
                        (run.converged == best.converged && run.G > best.G);
    if (better) {
      const int keep = have ? best.diag.restarts_used : 0;
      best = std::move(run);
      best.diag.restarts_used = std::max(keep, restart + 1);
      have = true;
    }
  }
  return finalize_solution(params, weights, cfg, best);
}

BoundarySolution solve_bd_max(const ChannelParams& params, const QuadConfig& cfg,
                              const OptimConfig& ocfg) {
  return solve_bd_max_impl(params, cfg, ocfg, Weights{0.0, 1.0});
}

KktReport kkt_check_r(const BoundarySolution& sol, const ChannelParams& params,
                      const QuadConfig& cfg, const OptimConfig& ocfg, bool use_kernel_entropy,
                      std::vector<std::pair<double, double>>* grid_out) {
  if (!(sol.weights.mu1 > 0.0))
    throw DomainError("kkt_check_r requires mu1 > 0 (use kkt_check_x2 for mu1 = 0)");
  params.check();
  cfg.check();
  ocfg.check();
  validate(params, sol.f_r, sol.f_x2);

  PointState st;
  for (const auto& pt : sol.f_r.points) {
    st.r.push_back(pt.r);
    st.p.push_back(pt.p);
  }
  if (sol.f_x2.is_points()) {
    for (const auto& pt : sol.f_x2.points().points) {
      st.x.push_back(pt.x);
      st.q.push_back(pt.q);
    }
  } else {
    // gains for omega1 come from the ring discretization
    const engine::GainMixture gm = engine::gain_mixture(params, sol.f_x2, cfg);
    st.x.resize(gm.g.size());
    st.q = gm.u;
    for (std::size_t i = 0; i < gm.g.size(); ++i) st.x[i] = cplx(gm.g[i] - params.a, 0.0);
  }
  const double r_grid_max = ocfg.grid_r_span * std::sqrt(params.P);
  ScanContext sc = make_scan_context(st, params, cfg, r_grid_max);

  const double mu1 = sol.weights.mu1;
  const double mud = sol.weights.mu2 - sol.weights.mu1;
  auto L = [&](double r) {
    const double o1 = omega1_tab(sc, r, cfg);
    double H = 0.0;
    if (mud != 0.0)
      H = use_kernel_entropy ? kernel_conditional_entropy(r, sol.f_x2, params, cfg, 1)
                             : cond_entropy_given_r(r, sol.f_x2, params, cfg, 1);
    return (mu1 * o1 + mud * H - sol.lambda * r * r) / mu1;
  };

  KktReport rep;
  double level = 0.0;
  std::vector<double> ls(sol.f_r.points.size());
  for (std::size_t k = 0; k < sol.f_r.points.size(); ++k) {
    ls[k] = L(sol.f_r.points[k].r);
    level += sol.f_r.points[k].p * ls[k];
  }
  rep.level = level;
  for (std::size_t k = 0; k < ls.size(); ++k)
    rep.on_support_spread = std::max(rep.on_support_spread, std::abs(ls[k] - level));

  std::vector<double> vals(static_cast<std::size_t>(ocfg.grid_r_points));
  kernels::indexed_fill(vals.size(), vals, [&](std::size_t i) {
    return L(r_grid_max * static_cast<double>(i) / static_cast<double>(ocfg.grid_r_points - 1));
  });
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double r = r_grid_max * static_cast<double>(i) / static_cast<double>(ocfg.grid_r_points - 1);
    if (grid_out != nullptr) grid_out->emplace_back(r, vals[i]);
    const double v = vals[i] - level;
    if (v > rep.max_violation) {
      rep.max_violation = v;
      rep.violation_r = r;
    }
  }
  return rep;
}

KktReport kkt_check_x2(const BoundarySolution& sol, const ChannelParams& params,
                       const QuadConfig& cfg, const OptimConfig& ocfg,
                       std::vector<std::pair<cplx, double>>* grid_out) {
  params.check();
  cfg.check();
  ocfg.check();
  if (!sol.f_x2.is_points())
    throw DomainError("kkt_check_x2 requires a point-mass BD support (ring solutions use the radius scan)");
  validate(params, sol.f_r, sol.f_x2);

  PointState st;
  for (const auto& pt : sol.f_r.points) {
    st.r.push_back(pt.r);
    st.p.push_back(pt.p);
  }
  for (const auto& pt : sol.f_x2.points().points) {
    st.x.push_back(pt.x);
    st.q.push_back(pt.q);
  }
  const double r_grid_max = ocfg.grid_r_span * std::sqrt(params.P);
  ScanContext sc = make_scan_context(st, params, cfg, r_grid_max);
  const X2Scan sx =
      scan_x2(sc, st, sol.weights, params, ocfg.grid_x2_radii, ocfg.grid_x2_angles, grid_out);
  KktReport rep;
  rep.level = sx.level;
  rep.max_violation = sx.residual;
  rep.violation_x2 = sx.arg;
  rep.on_support_spread = sx.spread;
  rep.cluster_diagnostic = sx.cluster;
  return rep;
}

KktReport kkt_check_rings(const BoundarySolution& sol, const ChannelParams& params,
                          const QuadConfig& cfg, const OptimConfig& ocfg,
                          std::vector<std::pair<double, double>>* grid_out) {
  params.check();
  cfg.check();
  ocfg.check();
  if (sol.f_x2.is_points())
    throw DomainError("kkt_check_rings requires a concentric-circle BD distribution");
  if (sol.weights.mu1 != 0.0)
    throw DomainError("kkt_check_rings applies to the mu1 = 0 boundary point only");
  validate(params, sol.f_r, sol.f_x2);

  // Marginal functional of a candidate ring radius against the current
  // conditional mixtures, averaged over the PT amplitude pmf.
  auto marginal = [&](double rho) {
    double s = 0.0;
    for (const auto& rp : sol.f_r.points) {
      RadialMixture mix;
      mix.sigma2 = params.sigma2;
      for (const auto& rg : sol.f_x2.circles().rings) {
        mix.c.push_back(rg.rho * rp.r);
        mix.logw.push_back(std::log(rg.q));
      }
      const double c = rho * rp.r;
      const RadialRule rule =
          engine::build_windowed_radial_rule({c}, std::sqrt(params.sigma2), cfg, 1);
      double term = 0.0;
      for (const auto& node : rule.nodes) {
        const double k = ring_density(node.x, c, params.sigma2);
        if (k > 0.0) term -= node.w * k * mix.log_density_2d(node.x);
      }
      s += rp.p * term;
    }
    return s;
  };

  KktReport rep;
  double level = 0.0;
  std::vector<double> ts;
  for (const auto& rg : sol.f_x2.circles().rings) {
    ts.push_back(marginal(rg.rho));
    level += rg.q * ts.back();
  }
  rep.level = level;
  for (double t : ts) rep.on_support_spread = std::max(rep.on_support_spread, std::abs(t - level));

  const int n = 256;
  std::vector<double> vals(n);
  kernels::indexed_fill(vals.size(), vals, [&](std::size_t i) {
    return marginal(static_cast<double>(i) / (n - 1));
  });
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double rho = static_cast<double>(i) / (n - 1);
    if (grid_out != nullptr) grid_out->emplace_back(rho, vals[static_cast<std::size_t>(i)]);
    const double v = vals[static_cast<std::size_t>(i)] - level;
    if (v > rep.max_violation) {
      rep.max_violation = v;
      rep.violation_r = rho;
    }
  }
  return rep;
}

std::vector<double> default_mu1_schedule(int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(0.5 * static_cast<double>(i) / (n - 1));
  return out;
}

std::vector<RatePair> pareto_hull(std::vector<RatePair> pts) {
  std::sort(pts.begin(), pts.end(), [](const RatePair& u, const RatePair& v) {
    if (u.R1 != v.R1) return u.R1 < v.R1;
    return u.R2 > v.R2;
  });
  // drop duplicate R1 keeping the highest R2
  std::vector<RatePair> uniq;
  for (const auto& pt : pts)
    if (uniq.empty() || pt.R1 > uniq.back().R1 + 1e-12) uniq.push_back(pt);
  if (uniq.size() <= 2) return uniq;

  auto cross = [](const RatePair& o, const RatePair& a, const RatePair& b) {
    return (a.R1 - o.R1) * (b.R2 - o.R2) - (a.R2 - o.R2) * (b.R1 - o.R1);
  };
  std::vector<RatePair> hull;
  for (const auto& pt : uniq) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), pt) >= 0.0)
      hull.pop_back();
    hull.push_back(pt);
  }
  // Pareto prune: walk from the max-R2 vertex so R2 is nonincreasing.
  std::size_t start = 0;
  for (std::size_t i = 1; i < hull.size(); ++i)
    if (hull[i].R2 > hull[start].R2) start = i;
  std::vector<RatePair> out(hull.begin() + static_cast<std::ptrdiff_t>(start), hull.end());
  return out;
}

bool hull_dominates(const std::vector<RatePair>& hull, const RatePair& pt, double tol) {
  if (hull.empty()) return false;
  if (pt.R1 > hull.back().R1 + tol) return false;
  if (pt.R1 <= hull.front().R1) return pt.R2 <= hull.front().R2 + tol;
  for (std::size_t i = 1; i < hull.size(); ++i) {
    if (pt.R1 <= hull[i].R1) {
      const double t = (pt.R1 - hull[i - 1].R1) / (hull[i].R1 - hull[i - 1].R1);
      const double r2 = hull[i - 1].R2 + t * (hull[i].R2 - hull[i - 1].R2);
      return pt.R2 <= r2 + tol;
    }
  }
  return pt.R2 <= hull.back().R2 + tol;
}

BoundaryTrace trace_boundary(const ChannelParams& params, const std::vector<double>& mu1_schedule,
                             const QuadConfig& cfg, const OptimConfig& ocfg) {
  params.check();
  cfg.check();
  ocfg.check();
  std::vector<double> sched = mu1_schedule;
  std::sort(sched.begin(), sched.end());
  for (double mu1 : sched)
    if (mu1 < 0.0 || mu1 > 0.5 + 1e-12)
      throw ConfigError("trace_boundary schedule values must lie in [0, 0.5]");

  BoundaryTrace trace;
  trace.points.resize(sched.size());
  // Solve from mu1 = 0.5 downward, warm-starting each point from its
  // neighbour; parallelism lives inside the per-point evaluations.
  const BoundarySolution* warm = nullptr;
  OptimConfig ocfg_warm = ocfg;
  for (std::size_t idx = sched.size(); idx-- > 0;) {
    Weights w{sched[idx], 1.0 - sched[idx]};
    OptimConfig use = ocfg;
    if (warm != nullptr) use.restarts = 1;
    trace.points[idx] = solve_weighted(params, w, cfg, use, warm);
    if (trace.points[idx].f_x2.is_points()) warm = &trace.points[idx];
  }
  (void)ocfg_warm;

  trace.c1_bits = c1(params);
  bool have_bd_max = !sched.empty() && sched.front() == 0.0;
  trace.bd_max_bits = have_bd_max ? trace.points.front().rates.R2
                                  : solve_bd_max(params, cfg, ocfg).rates.R2;

  std::vector<RatePair> pts;
  for (const auto& sol : trace.points) pts.push_back(sol.rates);
  pts.push_back({0.0, trace.bd_max_bits});
  pts.push_back({trace.c1_bits, 0.0});
  trace.hull = pareto_hull(std::move(pts));
  return trace;
}

}  // namespace ammac
