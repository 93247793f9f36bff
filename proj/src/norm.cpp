#include "slasso/norm.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace slasso {

namespace {

double group_norm(const WeightedGroup& G, const Eigen::VectorXd& w) {
  double s = 0;
  const auto& mem = G.members();
  const auto& d = G.weights();
  for (std::size_t k = 0; k < mem.size(); ++k) {
    const double t = d[k] * w[static_cast<Eigen::Index>(mem[k])];
    s += t * t;
  }
  return std::sqrt(s);
}

void require_length(const Eigen::VectorXd& v, std::size_t n, const char* who) {
  if (static_cast<std::size_t>(v.size()) != n)
    throw std::invalid_argument(std::string(who) + ": vector length " +
                                std::to_string(v.size()) + ", expected " + std::to_string(n));
}

// Entries of one group surviving the I-mask and the support of u, expressed
// in positions of the dense support vector.
struct GroupSlice {
  std::vector<std::size_t> pos;
  std::vector<double> d;
};

}  // namespace

double omega(const Eigen::VectorXd& w, const NormContext& ctx) {
  require_length(w, ctx.sys->p(), "omega");
  double total = 0;
  for (const auto& G : ctx.sys->groups()) total += group_norm(G, w);
  return total;
}

double omega_reduced(const Eigen::VectorXd& w_j, const VariableSet& j, const NormContext& ctx) {
  require_length(w_j, j.count(), "omega_reduced");
  if (j.universe_size() != ctx.sys->p())
    throw std::invalid_argument("omega_reduced: index set capacity mismatch");
  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ctx.sys->p()));
  const auto mem = j.members();
  for (std::size_t k = 0; k < mem.size(); ++k)
    full[static_cast<Eigen::Index>(mem[k])] = w_j[static_cast<Eigen::Index>(k)];
  return omega(full, ctx);
}

Eigen::VectorXd r_vector(const Eigen::VectorXd& w, const VariableSet& j, const NormContext& ctx) {
  require_length(w, ctx.sys->p(), "r_vector");
  if (j.universe_size() != ctx.sys->p())
    throw std::invalid_argument("r_vector: index set capacity mismatch");

  const auto mem = j.members();
  std::vector<std::size_t> pos(ctx.sys->p(), VariableSet::npos);
  for (std::size_t k = 0; k < mem.size(); ++k) pos[mem[k]] = k;

  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mem.size()));
  for (std::size_t g : active_groups(*ctx.sys, j)) {
    const auto& G = ctx.sys->group(g);
    const double n = group_norm(G, w);
    if (n <= ctx.smoothing_floor)
      throw DegeneratePointError("r_vector: active group " + G.vars().to_string() +
                                 " has norm " + std::to_string(n) +
                                 " at or below the smoothing floor");
    const auto& gm = G.members();
    const auto& gd = G.weights();
    for (std::size_t k = 0; k < gm.size(); ++k) {
      const std::size_t idx = gm[k];
      if (pos[idx] == VariableSet::npos) continue;
      r[static_cast<Eigen::Index>(pos[idx])] +=
          gd[k] * gd[k] * w[static_cast<Eigen::Index>(idx)] / n;
    }
  }
  return r;
}

DualNormEstimate dual_norm_bound_over(const Eigen::VectorXd& u, const VariableSet& i,
                                      const std::vector<std::size_t>& group_idx,
                                      const NormContext& ctx) {
  require_length(u, ctx.sys->p(), "dual_norm_bound_over");
  const std::size_t p = ctx.sys->p();

  std::vector<double> denom(p, 0.0);
  for (std::size_t g : group_idx) {
    const auto& G = ctx.sys->group(g);
    const auto& mem = G.members();
    const auto& d = G.weights();
    for (std::size_t k = 0; k < mem.size(); ++k)
      if (i.contains(mem[k])) denom[mem[k]] += d[k];
  }
  for (std::size_t j = i.first(); j != VariableSet::npos; j = i.next(j))
    if (denom[j] == 0.0 && u[static_cast<Eigen::Index>(j)] != 0.0)
      throw std::invalid_argument("dual norm bound: variable " + std::to_string(j) +
                                  " carries weight but no group in the collection covers it");

  double best = 0;
  for (std::size_t g : group_idx) {
    const auto& G = ctx.sys->group(g);
    double s = 0;
    for (std::size_t j : G.members()) {
      if (!i.contains(j) || denom[j] == 0.0) continue;
      const double t = u[static_cast<Eigen::Index>(j)] / denom[j];
      s += t * t;
    }
    best = std::max(best, std::sqrt(s));
  }

  DualNormEstimate est;
  est.value = best;
  est.kind = DualKind::kUpperBound;
  est.lower = 0.0;
  est.upper = best;
  return est;
}

DualNormEstimate dual_norm_upper_bound(const Eigen::VectorXd& u, const VariableSet& i,
                                       const NormContext& ctx) {
  // Strict coverage over all of I, per the reduced-norm contract.
  for (std::size_t j = i.first(); j != VariableSet::npos; j = i.next(j))
    if (ctx.sys->groups_containing(j).empty())
      throw std::invalid_argument("dual_norm_upper_bound: variable " + std::to_string(j) +
                                  " in I is covered by no group");
  return dual_norm_bound_over(u, i, active_groups(*ctx.sys, i), ctx);
}

DualNormEstimate dual_norm_exact_over(const Eigen::VectorXd& u, const VariableSet& i,
                                      const std::vector<std::size_t>& group_idx,
                                      const NormContext& ctx, double tol,
                                      std::size_t max_iters) {
  require_length(u, ctx.sys->p(), "dual_norm_exact_over");

  // Dense support: I-masked coordinates carrying weight. The maximizer of
  // u^T v - Omega(v)^2/2 puts no mass elsewhere.
  std::vector<std::size_t> sup;
  for (std::size_t j = i.first(); j != VariableSet::npos; j = i.next(j))
    if (u[static_cast<Eigen::Index>(j)] != 0.0) sup.push_back(j);

  DualNormEstimate est;
  est.kind = DualKind::kExact;
  est.tolerance = tol;
  if (sup.empty()) return est;

  std::vector<std::size_t> pos(ctx.sys->p(), VariableSet::npos);
  for (std::size_t k = 0; k < sup.size(); ++k) pos[sup[k]] = k;
  const std::size_t ns = sup.size();

  std::vector<GroupSlice> slices;
  for (std::size_t g : group_idx) {
    const auto& G = ctx.sys->group(g);
    GroupSlice sl;
    const auto& mem = G.members();
    const auto& d = G.weights();
    for (std::size_t k = 0; k < mem.size(); ++k)
      if (pos[mem[k]] != VariableSet::npos) {
        sl.pos.push_back(pos[mem[k]]);
        sl.d.push_back(d[k]);
      }
    if (!sl.pos.empty()) slices.push_back(std::move(sl));
  }
  const std::size_t ng = slices.size();

  Eigen::VectorXd us(static_cast<Eigen::Index>(ns));
  for (std::size_t k = 0; k < ns; ++k) us[static_cast<Eigen::Index>(k)] =
      u[static_cast<Eigen::Index>(sup[k])];

  std::vector<double> dsum(ns, 0.0);  // per-coordinate weight sums
  for (const auto& sl : slices)
    for (std::size_t k = 0; k < sl.pos.size(); ++k) dsum[sl.pos[k]] += sl.d[k];
  for (std::size_t k = 0; k < ns; ++k)
    if (dsum[k] == 0.0)
      throw std::invalid_argument("dual_norm_exact: variable " + std::to_string(sup[k]) +
                                  " carries weight but no group in the collection covers it");

  auto omega_of = [&](const Eigen::VectorXd& v) {
    double total = 0;
    for (const auto& sl : slices) {
      double s = 0;
      for (std::size_t k = 0; k < sl.pos.size(); ++k) {
        const double t = sl.d[k] * v[static_cast<Eigen::Index>(sl.pos[k])];
        s += t * t;
      }
      total += std::sqrt(s);
    }
    return total;
  };

  // Feasible point of the conic dual built around the current primal iterate;
  // any feasible point's worst group norm is a valid upper bound. A few
  // rebalancing sweeps shift load toward groups with slack while keeping the
  // per-coordinate constraints exact.
  std::vector<std::vector<double>> xi(ng);
  for (std::size_t g = 0; g < ng; ++g) xi[g].assign(slices[g].pos.size(), 0.0);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> covering(ns);
  for (std::size_t g = 0; g < ng; ++g)
    for (std::size_t k = 0; k < slices[g].pos.size(); ++k)
      covering[slices[g].pos[k]].emplace_back(g, k);

  auto refine_upper = [&](const Eigen::VectorXd& v, double target, double& upper) {
    if (target <= 0) return;
    std::vector<double> vnorm(ng, 0.0);
    double maxn = 0;
    for (std::size_t g = 0; g < ng; ++g) {
      double s = 0;
      for (std::size_t k = 0; k < slices[g].pos.size(); ++k) {
        const double t = slices[g].d[k] * v[static_cast<Eigen::Index>(slices[g].pos[k])];
        s += t * t;
      }
      vnorm[g] = std::sqrt(s);
      maxn = std::max(maxn, vnorm[g]);
    }
    if (maxn <= 0) return;

    // Groups carrying primal mass get the stationarity-shaped load at scale
    // `target`; the rest start empty so they keep headroom.
    std::vector<double> sq(ng, 0.0);
    for (std::size_t g = 0; g < ng; ++g) {
      const bool live = vnorm[g] > 1e-9 * maxn;
      for (std::size_t k = 0; k < slices[g].pos.size(); ++k) {
        xi[g][k] = live ? -target * slices[g].d[k] *
                              v[static_cast<Eigen::Index>(slices[g].pos[k])] / vnorm[g]
                        : 0.0;
        sq[g] += xi[g][k] * xi[g][k];
      }
    }

    // Each coordinate's constraint is re-split optimally given the load the
    // covering groups carry elsewhere: every participating group ends at a
    // common level L found by bisection on the delivered mass. One pass makes
    // xi feasible; further sweeps only lower the worst group norm.
    for (int sweep = 0; sweep < 3; ++sweep) {
      for (std::size_t j = 0; j < ns; ++j) {
        const double c = -us[static_cast<Eigen::Index>(j)];
        const double csign = c < 0 ? -1.0 : 1.0;
        const double cmag = std::abs(c);
        // norms excluding this coordinate
        double hi = 0;
        for (auto [g, k] : covering[j]) {
          const double osq = std::max(sq[g] - xi[g][k] * xi[g][k], 0.0);
          const double cand =
              std::sqrt(osq + (cmag / slices[g].d[k]) * (cmag / slices[g].d[k]));
          if (hi == 0 || cand < hi) hi = cand;
        }
        double lo = 0;
        for (int b = 0; b < 60; ++b) {
          const double mid = 0.5 * (lo + hi);
          double cap = 0;
          for (auto [g, k] : covering[j]) {
            const double osq = std::max(sq[g] - xi[g][k] * xi[g][k], 0.0);
            if (mid * mid > osq) cap += slices[g].d[k] * std::sqrt(mid * mid - osq);
          }
          (cap >= cmag ? hi : lo) = mid;
        }
        double delivered = 0;
        std::pair<std::size_t, std::size_t> last{0, 0};
        bool any = false;
        for (auto [g, k] : covering[j]) {
          const double osq = std::max(sq[g] - xi[g][k] * xi[g][k], 0.0);
          double nx = 0;
          if (hi * hi > osq) {
            nx = csign * std::sqrt(hi * hi - osq);
            delivered += slices[g].d[k] * nx;
            last = {g, k};
            any = true;
          }
          sq[g] += nx * nx - xi[g][k] * xi[g][k];
          sq[g] = std::max(sq[g], 0.0);
          xi[g][k] = nx;
        }
        // push the bisection slack onto the last participant so the
        // constraint holds exactly
        if (any) {
          auto [g, k] = last;
          const double fix = (c - delivered) / slices[g].d[k];
          const double nx = xi[g][k] + fix;
          sq[g] += nx * nx - xi[g][k] * xi[g][k];
          sq[g] = std::max(sq[g], 0.0);
          xi[g][k] = nx;
        }
      }
    }

    // The incremental sq only steered the sweeps; recompute from the actual
    // xi before trusting it as a bound.
    double worst = 0;
    for (std::size_t g = 0; g < ng; ++g) {
      double s = 0;
      for (double x : xi[g]) s += x * x;
      worst = std::max(worst, std::sqrt(s));
    }
    upper = std::min(upper, worst);
  };

  // Quadratic endgame: once the fixed-point iterates identify the live
  // structure, the restricted problem max u^T v - Omega(v)^2/2 is smooth and
  // a few Newton steps land on the maximizer. The result only feeds the
  // evaluation-based bounds, so a bad step costs tightness, never validity.
  auto newton_polish = [&](Eigen::VectorXd& w) {
    std::vector<double> n_g(ng, 0.0);
    double nmax = 0;
    auto norms_of = [&](const Eigen::VectorXd& x) {
      nmax = 0;
      for (std::size_t g = 0; g < ng; ++g) {
        double s = 0;
        for (std::size_t k = 0; k < slices[g].pos.size(); ++k) {
          const double t = slices[g].d[k] * x[static_cast<Eigen::Index>(slices[g].pos[k])];
          s += t * t;
        }
        n_g[g] = std::sqrt(s);
        nmax = std::max(nmax, n_g[g]);
      }
    };
    norms_of(w);
    if (nmax <= 0) return;
    std::vector<char> glive(ng, 0);
    std::vector<char> clive(ns, 1);
    for (std::size_t g = 0; g < ng; ++g) glive[g] = n_g[g] > 1e-9 * nmax;
    for (std::size_t g = 0; g < ng; ++g)
      if (!glive[g])
        for (std::size_t k : slices[g].pos) clive[k] = 0;
    std::vector<std::size_t> free_pos;
    for (std::size_t k = 0; k < ns; ++k)
      if (clive[k]) free_pos.push_back(k);
    if (free_pos.empty()) return;
    std::vector<std::size_t> where(ns, VariableSet::npos);
    for (std::size_t k = 0; k < free_pos.size(); ++k) where[free_pos[k]] = k;
    for (std::size_t k = 0; k < ns; ++k)
      if (!clive[k]) w[static_cast<Eigen::Index>(k)] = 0;

    const auto nf = static_cast<Eigen::Index>(free_pos.size());
    auto fval = [&](const Eigen::VectorXd& x) {
      const double om = omega_of(x);
      return us.dot(x) - 0.5 * om * om;
    };
    double fcur = fval(w);
    for (int step = 0; step < 8; ++step) {
      norms_of(w);
      double om = 0;
      for (std::size_t g = 0; g < ng; ++g)
        if (glive[g]) om += n_g[g];
      Eigen::VectorXd gvec = Eigen::VectorXd::Zero(nf);
      Eigen::MatrixXd curv = Eigen::MatrixXd::Zero(nf, nf);
      bool degenerate = false;
      for (std::size_t g = 0; g < ng; ++g) {
        if (!glive[g]) continue;
        if (n_g[g] <= 0) {
          degenerate = true;
          break;
        }
        Eigen::VectorXd dsq_w = Eigen::VectorXd::Zero(nf);
        for (std::size_t k = 0; k < slices[g].pos.size(); ++k) {
          const std::size_t fk = where[slices[g].pos[k]];
          if (fk == VariableSet::npos) continue;
          const double dsq = slices[g].d[k] * slices[g].d[k];
          dsq_w[static_cast<Eigen::Index>(fk)] =
              dsq * w[static_cast<Eigen::Index>(slices[g].pos[k])];
          curv(static_cast<Eigen::Index>(fk), static_cast<Eigen::Index>(fk)) += om * dsq / n_g[g];
        }
        gvec += dsq_w / n_g[g];
        curv -= (om / (n_g[g] * n_g[g] * n_g[g])) * (dsq_w * dsq_w.transpose());
      }
      if (degenerate) break;
      curv += gvec * gvec.transpose();
      Eigen::VectorXd grad(nf);
      for (Eigen::Index k = 0; k < nf; ++k)
        grad[k] = us[static_cast<Eigen::Index>(free_pos[static_cast<std::size_t>(k)])] -
                  om * gvec[k];
      Eigen::LDLT<Eigen::MatrixXd> ldlt(curv);
      if (ldlt.info() != Eigen::Success) break;
      const Eigen::VectorXd delta = ldlt.solve(grad);
      if (!delta.allFinite()) break;
      double t = 1.0;
      bool accepted = false;
      while (t > 1e-8) {
        Eigen::VectorXd trial = w;
        for (Eigen::Index k = 0; k < nf; ++k)
          trial[static_cast<Eigen::Index>(free_pos[static_cast<std::size_t>(k)])] += t * delta[k];
        const double ft = fval(trial);
        if (ft > fcur) {
          w = trial;
          fcur = ft;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
    }
  };

  double upper =
      dual_norm_bound_over(u, i, group_idx, ctx).value + 0.0;

  // Starting candidates: coordinates, matched per-group directions, u itself.
  double lower = 0;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ns));
  for (std::size_t k = 0; k < ns; ++k)
    lower = std::max(lower, std::abs(us[static_cast<Eigen::Index>(k)]) / dsum[k]);
  {
    const double om = omega_of(us);
    if (om > 0) {
      const double ratio = us.squaredNorm() / om;
      if (ratio > lower) lower = ratio;
    }
    v = us;
    for (const auto& sl : slices) {
      Eigen::VectorXd cand = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ns));
      for (std::size_t k = 0; k < sl.pos.size(); ++k)
        cand[static_cast<Eigen::Index>(sl.pos[k])] =
            us[static_cast<Eigen::Index>(sl.pos[k])] / (sl.d[k] * sl.d[k]);
      const double omc = omega_of(cand);
      if (omc <= 0) continue;
      const double val = us.dot(cand) / omc;
      if (val > lower) {
        lower = val;
        v = cand;
      }
    }
  }

  std::vector<double> eta(ng);
  std::vector<double> zeta(ns);
  Eigen::VectorXd v_prev, v_prev2;
  // The eta floor starts coarse and anneals down. A hard tiny floor can trap
  // the iteration: a group whose norm once touches the floor suppresses every
  // coordinate it covers, so its norm never recovers even when the true
  // maximizer needs it.
  double floor_rel = 1e-2;
  std::size_t it = 0;
  for (; it < max_iters; ++it) {
    if (upper - lower <= tol * std::max(upper, 1e-300)) break;

    double total = 0;
    for (std::size_t g = 0; g < ng; ++g) {
      double s = 0;
      for (std::size_t k = 0; k < slices[g].pos.size(); ++k) {
        const double t = slices[g].d[k] * v[static_cast<Eigen::Index>(slices[g].pos[k])];
        s += t * t;
      }
      eta[g] = std::sqrt(s);
      total += eta[g];
    }
    if (total <= 0) break;
    double mass = 0;
    for (std::size_t g = 0; g < ng; ++g) {
      eta[g] = std::max(eta[g], floor_rel * total);
      mass += eta[g];
    }
    for (std::size_t g = 0; g < ng; ++g) eta[g] /= mass;
    floor_rel = std::max(floor_rel * 0.85, 1e-14);

    std::fill(zeta.begin(), zeta.end(), 0.0);
    for (std::size_t g = 0; g < ng; ++g)
      for (std::size_t k = 0; k < slices[g].pos.size(); ++k)
        zeta[slices[g].pos[k]] += slices[g].d[k] * slices[g].d[k] / eta[g];

    double certified_sq = 0;
    for (std::size_t k = 0; k < ns; ++k) {
      zeta[k] = 1.0 / zeta[k];
      v[static_cast<Eigen::Index>(k)] = zeta[k] * us[static_cast<Eigen::Index>(k)];
      certified_sq += zeta[k] * us[static_cast<Eigen::Index>(k)] *
                      us[static_cast<Eigen::Index>(k)];
    }
    lower = std::max(lower, std::sqrt(certified_sq));
    const double om = omega_of(v);
    if (om > 0) lower = std::max(lower, us.dot(v) / om);

    // The fixed-point iterates approach the maximizer linearly; jumping ahead
    // along the last step and evaluating the (always valid) ratio bound there
    // buys back most of the remaining error.
    bool have_vx = false;
    Eigen::VectorXd vx;
    if (v_prev.size() == v.size() && v_prev2.size() == v.size()) {
      const double num = (v - v_prev).norm();
      const double den = (v_prev - v_prev2).norm();
      if (den > 0 && num > 0 && num < den) {
        const double m = num / den;
        vx = v + (m / (1.0 - m)) * (v - v_prev);
        have_vx = true;
        const double omx = omega_of(vx);
        if (omx > 0) lower = std::max(lower, us.dot(vx) / omx);
      }
    }
    v_prev2 = v_prev;
    v_prev = v;

    refine_upper(v, lower, upper);
    if (have_vx) refine_upper(vx, lower, upper);

    const bool near = upper - lower <= 1e-4 * std::max(upper, 1e-300);
    if ((near && it % 25 == 10) || (it > 0 && it % 500 == 0)) {
      Eigen::VectorXd vp = v;
      newton_polish(vp);
      const double omp = omega_of(vp);
      if (omp > 0) lower = std::max(lower, us.dot(vp) / omp);
      refine_upper(vp, lower, upper);
    }
  }

  est.iterations = it;
  est.lower = lower;
  est.upper = upper;
  est.value = 0.5 * (lower + upper);
  if (upper - lower > tol * std::max(upper, 1e-300)) {
    std::ostringstream msg;
    msg << "dual_norm_exact: bracket [" << std::setprecision(12) << lower << ", " << upper
        << "] did not close to relative tolerance " << tol << " in " << max_iters
        << " iterations";
    throw ConvergenceError(msg.str(), lower, upper);
  }
  return est;
}

DualNormEstimate dual_norm_exact(const Eigen::VectorXd& u, const VariableSet& i,
                                 const NormContext& ctx, double tol, std::size_t max_iters) {
  if (i.count() > 200)
    throw std::invalid_argument(
        "dual_norm_exact: |I| = " + std::to_string(i.count()) +
        " exceeds the desk-scale guard of 200; use dual_norm_upper_bound");
  return dual_norm_exact_over(u, i, active_groups(*ctx.sys, i), ctx, tol, max_iters);
}

double dual_norm_disjoint(const Eigen::VectorXd& u, const VariableSet& a, const VariableSet& b,
                          const NormContext& ctx, double tol) {
  if (a.intersects(b) || (a | b) != VariableSet::all(ctx.sys->p()))
    throw std::invalid_argument("dual_norm_disjoint: blocks must partition the variables");
  std::vector<std::size_t> ga, gb;
  for (std::size_t g = 0; g < ctx.sys->group_count(); ++g) {
    const auto& v = ctx.sys->group(g).vars();
    if (v.is_subset_of(a))
      ga.push_back(g);
    else if (v.is_subset_of(b))
      gb.push_back(g);
    else
      throw std::invalid_argument("dual_norm_disjoint: group " + v.to_string() +
                                  " straddles the partition");
  }
  const double va = dual_norm_exact_over(u, a, ga, ctx, tol).value;
  const double vb = dual_norm_exact_over(u, b, gb, ctx, tol).value;
  return std::max(va, vb);
}

}  // namespace slasso
