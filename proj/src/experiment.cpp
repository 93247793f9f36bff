#include "slasso/experiment.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <variant>

#include "slasso/active_set.hpp"
#include "slasso/pattern_algebra.hpp"

namespace slasso {

namespace {

constexpr std::size_t kSupportSampleCap = 20000;

std::uint64_t mix_seed(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::mt19937_64 seeded_rng(std::uint64_t seed) {
  std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return std::mt19937_64(ss);
}

void fill_gaussian(Eigen::MatrixXd& m, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = normal(rng);
}

void fill_gaussian(Eigen::VectorXd& v, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index r = 0; r < v.size(); ++r) v[r] = normal(rng);
}

// Vertex-centered diamonds have 2r(r+1) cells.
std::optional<std::size_t> diamond_radius(std::size_t hull_size) {
  for (std::size_t r = 1; 2 * r * (r + 1) <= hull_size; ++r)
    if (2 * r * (r + 1) == hull_size) return r;
  return std::nullopt;
}

// (col, row) coordinates of a grid variable under the fixed layout.
std::pair<std::int64_t, std::int64_t> grid_coords(std::size_t v, std::size_t l) {
  return {static_cast<std::int64_t>(v % l), static_cast<std::int64_t>(v / l)};
}

const std::array<std::pair<std::int64_t, std::int64_t>, 8> kGridDirections = {
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

std::array<std::int64_t, 8> direction_maxima(const std::vector<std::size_t>& cells,
                                             std::size_t l) {
  std::array<std::int64_t, 8> best;
  best.fill(std::numeric_limits<std::int64_t>::min());
  for (std::size_t v : cells) {
    const auto [ci, cj] = grid_coords(v, l);
    for (std::size_t d = 0; d < kGridDirections.size(); ++d) {
      const std::int64_t val = kGridDirections[d].first * ci + kGridDirections[d].second * cj;
      best[d] = std::max(best[d], val);
    }
  }
  return best;
}

// The support spans the hull when it achieves the hull's extreme value in
// every supporting direction: both endpoints on a sequence, all eight
// half-plane directions on a grid.
bool spans_hull(const std::vector<std::size_t>& pick, const std::vector<std::size_t>& hull,
                const Topology& topology) {
  if (std::holds_alternative<SequenceTopology>(topology))
    return pick.front() == hull.front() && pick.back() == hull.back();
  const auto& grid = std::get<GridTopology>(topology);
  return direction_maxima(pick, grid.l) == direction_maxima(hull, grid.l);
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ';';
    os << v[i];
  }
  return os.str();
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << v;
  return os.str();
}

std::string join_doubles(const std::vector<double>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ';';
    os << format_double(v[i]);
  }
  return os.str();
}

// Linear interpolation between order statistics; v must be sorted.
double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) throw std::logic_error("quantile of an empty sample");
  if (v.size() == 1) return v.front();
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

struct Fold {
  Dataset fit;
  Dataset val;
};

Dataset take_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), data.X.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.X.row(static_cast<Eigen::Index>(r)) = data.X.row(static_cast<Eigen::Index>(rows[r]));
    out.y[static_cast<Eigen::Index>(r)] = data.y[static_cast<Eigen::Index>(rows[r])];
  }
  return out;
}

std::vector<Fold> make_folds(const Dataset& train, std::size_t k) {
  std::vector<Fold> folds;
  folds.reserve(k);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> val_rows, fit_rows;
    for (std::size_t i = 0; i < train.n(); ++i)
      (i % k == f ? val_rows : fit_rows).push_back(i);
    folds.push_back({take_rows(train, fit_rows), take_rows(train, val_rows)});
  }
  return folds;
}

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("cross-validation: empty penalty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0) || !std::isfinite(grid[i]))
      throw std::invalid_argument("cross-validation: grid values must be positive and finite");
    if (i && !(grid[i] < grid[i - 1]))
      throw std::invalid_argument("cross-validation: grid must be strictly decreasing");
  }
}

// Mean held-out squared error per grid point, warm-starting down the grid
// within each fold.
std::vector<double> cv_curve(const std::vector<Fold>& folds, const GroupSystem& sys,
                             const std::vector<double>& grid, const SolverConfig& cfg) {
  std::vector<double> score(grid.size(), 0.0);
  const VariableSet allv = VariableSet::all(sys.p());
  for (const Fold& fold : folds) {
    const QuadraticLoss loss = QuadraticLoss::from_data(fold.fit);
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.p()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const FitResult fit = solve_lambda_form_reduced(loss, sys, allv, grid[i], cfg, &warm);
      warm = fit.w;
      const Eigen::VectorXd resid = fold.val.y - fold.val.X * fit.w;
      score[i] += resid.squaredNorm() / static_cast<double>(fold.val.n());
    }
  }
  for (double& s : score) s /= static_cast<double>(folds.size());
  return score;
}

// First finite minimum; ties go to the earlier (stronger) penalty.
std::size_t best_index(const std::vector<double>& score) {
  std::size_t best = VariableSet::npos;
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (!std::isfinite(score[i])) continue;
    if (best == VariableSet::npos || score[i] < score[best]) best = i;
  }
  if (best == VariableSet::npos)
    throw std::runtime_error("cross-validation: no grid point produced a finite score");
  return best;
}

// Full-data fit at grid[upto], reached by a warm-started walk from the top.
FitResult path_fit(const Dataset& train, const GroupSystem& sys,
                   const std::vector<double>& grid, std::size_t upto,
                   const SolverConfig& cfg) {
  const QuadraticLoss loss = QuadraticLoss::from_data(train);
  const VariableSet allv = VariableSet::all(sys.p());
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.p()));
  FitResult fit;
  for (std::size_t i = 0; i <= upto; ++i) {
    fit = solve_lambda_form_reduced(loss, sys, allv, grid[i], cfg, &warm);
    warm = fit.w;
  }
  return fit;
}

struct SingleModel {
  FitResult fit;
  double lambda = 0.0;
};

SingleModel cv_single_model(const Dataset& train, const std::vector<Fold>& folds,
                            const GroupSystem& sys, const std::vector<double>& grid,
                            const SolverConfig& cfg) {
  const std::vector<double> score = cv_curve(folds, sys, grid, cfg);
  const std::size_t idx = best_index(score);
  return {path_fit(train, sys, grid, idx, cfg), grid[idx]};
}

GroupSystem orientation_subsystem(const GroupSystem& sys, double theta) {
  std::vector<WeightedGroup> groups;
  for (const WeightedGroup& g : sys.groups())
    if (g.theta() && *g.theta() == theta) groups.push_back(g);
  return add_full_group(GroupSystem(sys.p(), std::move(groups), sys.topology()), 1.0);
}

std::uint64_t instance_seed(std::uint64_t base, std::size_t a, std::size_t b, std::size_t c) {
  return mix_seed(mix_seed(mix_seed(base, a), b), c);
}

}  // namespace

std::size_t SyntheticSpec::p() const {
  if (const auto* seq = std::get_if<SequenceTopology>(&topology)) return seq->l;
  if (const auto* grid = std::get_if<GridTopology>(&topology)) return grid->h * grid->l;
  return 0;
}

SyntheticInstance generate_instance(const SyntheticSpec& spec) {
  const std::size_t p = spec.p();
  if (p == 0)
    throw std::invalid_argument("generate_instance: a sequence or grid topology is required");
  if (spec.hull_size == 0 || spec.hull_size > p)
    throw std::invalid_argument("generate_instance: hull size must be in [1, p]");
  if (!(spec.nonzero_fraction > 0.0) || spec.nonzero_fraction > 1.0)
    throw std::invalid_argument("generate_instance: nonzero fraction must be in (0, 1]");
  if (spec.n_train == 0 || spec.n_test == 0)
    throw std::invalid_argument("generate_instance: need at least one train and test row");
  if (!(spec.snr > 0.0) || !std::isfinite(spec.snr))
    throw std::invalid_argument("generate_instance: signal-to-noise ratio must be positive");

  std::mt19937_64 rng = seeded_rng(spec.seed);
  VariableSet hull(p);

  if (const auto* seq = std::get_if<SequenceTopology>(&spec.topology)) {
    if (spec.hull_size > seq->l)
      throw std::invalid_argument("generate_instance: hull does not fit the sequence");
    std::uniform_int_distribution<std::size_t> start_at(0, seq->l - spec.hull_size);
    const std::size_t start = start_at(rng);
    for (std::size_t j = 0; j < spec.hull_size; ++j) hull.insert(start + j);
  } else {
    const auto& grid = std::get<GridTopology>(spec.topology);
    const auto radius = diamond_radius(spec.hull_size);
    if (!radius)
      throw std::invalid_argument(
          "generate_instance: grid hull size must be a diamond count 2r(r+1)");
    const std::size_t box = 2 * *radius;
    if (box > grid.h || box > grid.l)
      throw std::invalid_argument("generate_instance: hull does not fit the grid");
    std::uniform_int_distribution<std::size_t> row_at(0, grid.h - box);
    std::uniform_int_distribution<std::size_t> col_at(0, grid.l - box);
    const std::size_t row0 = row_at(rng);
    const std::size_t col0 = col_at(rng);
    const std::int64_t edge = static_cast<std::int64_t>(box) - 1;
    for (std::size_t dj = 0; dj < box; ++dj)
      for (std::size_t di = 0; di < box; ++di) {
        const std::int64_t a = std::abs(2 * static_cast<std::int64_t>(dj) - edge);
        const std::int64_t b = std::abs(2 * static_cast<std::int64_t>(di) - edge);
        if (a + b <= static_cast<std::int64_t>(box))
          hull.insert(grid_index(col0 + di, row0 + dj, grid.l));
      }
  }

  const std::vector<std::size_t> hull_members = hull.members();
  std::size_t k = static_cast<std::size_t>(
      std::llround(spec.nonzero_fraction * static_cast<double>(spec.hull_size)));
  k = std::min(std::max<std::size_t>(k, 1), spec.hull_size);
  const std::size_t min_span =
      std::min(spec.hull_size,
               std::holds_alternative<SequenceTopology>(spec.topology) ? std::size_t{2}
                                                                       : std::size_t{4});
  if (k < min_span)
    throw std::invalid_argument(
        "generate_instance: nonzero fraction too small to span the hull");

  std::vector<std::size_t> support = hull_members;
  if (k < spec.hull_size) {
    std::size_t tries = 0;
    do {
      if (++tries > kSupportSampleCap)
        throw std::runtime_error(
            "generate_instance: could not draw a support spanning the hull");
      support.clear();
      std::sample(hull_members.begin(), hull_members.end(), std::back_inserter(support), k,
                  rng);
    } while (!spans_hull(support, hull_members, spec.topology));
  }

  SyntheticInstance inst;
  inst.hull = hull;
  inst.w_true = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t j : support) inst.w_true[static_cast<Eigen::Index>(j)] = normal(rng);
  }

  inst.train.X.resize(static_cast<Eigen::Index>(spec.n_train), static_cast<Eigen::Index>(p));
  fill_gaussian(inst.train.X, rng);
  Eigen::VectorXd noise(static_cast<Eigen::Index>(spec.n_train));
  fill_gaussian(noise, rng);
  const Eigen::VectorXd signal = inst.train.X * inst.w_true;
  const double signal_norm = signal.norm();
  const double noise_norm = noise.norm();
  if (!(signal_norm > 0.0) || !(noise_norm > 0.0))
    throw std::runtime_error("generate_instance: degenerate draw, signal or noise vanished");
  const double scale = signal_norm / (spec.snr * noise_norm);
  inst.train.y = signal + scale * noise;

  inst.test.X.resize(static_cast<Eigen::Index>(spec.n_test), static_cast<Eigen::Index>(p));
  fill_gaussian(inst.test.X, rng);
  Eigen::VectorXd test_noise(static_cast<Eigen::Index>(spec.n_test));
  fill_gaussian(test_noise, rng);
  inst.test.y = inst.test.X * inst.w_true + scale * test_noise;
  return inst;
}

GroupSystem topology_groups(const Topology& topology, const std::vector<double>& grid_thetas) {
  if (const auto* seq = std::get_if<SequenceTopology>(&topology)) return sequence_groups(seq->l);
  if (const auto* grid = std::get_if<GridTopology>(&topology))
    return grid_groups(grid->h, grid->l, grid_thetas);
  throw std::invalid_argument("topology_groups: a sequence or grid topology is required");
}

double prediction_error(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_true,
                        const Dataset& test) {
  if (w_hat.size() != w_true.size() ||
      static_cast<std::size_t>(w_true.size()) != test.p())
    throw std::invalid_argument("prediction_error: dimension mismatch");
  if (test.n() == 0) throw std::invalid_argument("prediction_error: empty test set");
  const double denom = (test.X * w_true).squaredNorm();
  if (!(denom > 0.0))
    throw std::invalid_argument("prediction_error: the true signal vanishes on the test set");
  return (test.X * (w_true - w_hat)).squaredNorm() / denom;
}

FitMethod fit_method_from_string(const std::string& s) {
  if (s == "lasso") return FitMethod::kLasso;
  if (s == "slasso") return FitMethod::kSlasso;
  if (s == "islasso") return FitMethod::kIslasso;
  throw std::invalid_argument("unknown fit method: " + s);
}

std::string to_string(FitMethod m) {
  switch (m) {
    case FitMethod::kLasso: return "lasso";
    case FitMethod::kSlasso: return "slasso";
    case FitMethod::kIslasso: return "islasso";
  }
  throw std::logic_error("unreachable fit method");
}

std::vector<double> lambda_grid(const Dataset& train, const GroupSystem& sys,
                                std::size_t num_points, double min_ratio) {
  if (num_points == 0) throw std::invalid_argument("lambda_grid: need at least one point");
  if (!(min_ratio > 0 && min_ratio < 1))
    throw std::invalid_argument("lambda_grid: min_ratio must be in (0,1)");
  const double top = lambda_max_bound(train, sys);
  if (!(top > 0))
    throw std::invalid_argument("lambda_grid: X'y vanishes, the grid is trivial");
  std::vector<double> grid(num_points);
  for (std::size_t k = 0; k < num_points; ++k) {
    const double frac = num_points == 1
                            ? 0.0
                            : static_cast<double>(k) / static_cast<double>(num_points - 1);
    grid[k] = top * std::pow(min_ratio, frac);
  }
  return grid;
}

std::string MethodSpec::label() const {
  if (method == FitMethod::kLasso) return "lasso";
  return to_string(method) + "-" + to_string(weights);
}

CvFit fit_with_cv(const Dataset& train, const GroupSystem& sys, FitMethod method,
                  const std::vector<double>& grid, std::size_t k_folds,
                  const SolverConfig& cfg) {
  if (train.p() != sys.p())
    throw std::invalid_argument("fit_with_cv: data and groups disagree on p");
  if (k_folds < 2) throw std::invalid_argument("fit_with_cv: need at least two folds");
  if (train.n() < k_folds)
    throw std::invalid_argument("fit_with_cv: fewer rows than folds");
  check_grid(grid);

  const std::size_t p = train.p();
  const std::vector<Fold> folds = make_folds(train, k_folds);

  CvFit out;
  if (method == FitMethod::kIslasso) {
    const std::vector<double> thetas = sys.orientations();
    if (thetas.empty())
      throw std::invalid_argument("fit_with_cv: the intersected fit needs oriented groups");
    VariableSet inter = VariableSet::all(p);
    for (double theta : thetas) {
      const GroupSystem sub = orientation_subsystem(sys, theta);
      const SingleModel model = cv_single_model(train, folds, sub, grid, cfg);
      inter &= model.fit.support;
      out.chosen_lambdas.push_back(model.lambda);
    }
    out.pattern = inter;
  } else {
    const GroupSystem fit_sys = method == FitMethod::kLasso ? singleton_groups(p) : sys;
    const SingleModel model = cv_single_model(train, folds, fit_sys, grid, cfg);
    out.pattern = model.fit.support;
    out.chosen_lambdas = {model.lambda};
  }
  out.refit = ols_refit(train, out.pattern, &out.rank_deficient);
  return out;
}

SweepConfig apply_full_scale(SweepConfig cfg) {
  if (std::holds_alternative<SequenceTopology>(cfg.topology))
    cfg.topology = SequenceTopology{400};
  else if (std::holds_alternative<GridTopology>(cfg.topology))
    cfg.topology = GridTopology{20, 20};
  else
    throw std::invalid_argument("apply_full_scale: a sequence or grid topology is required");
  cfg.hull_size = 24;
  cfg.sample_sizes = {250, 500, 1000};
  cfg.settings = 50;
  cfg.n_test = 500;
  return cfg;
}

ExperimentResult run_error_sweep(const SweepConfig& cfg_in) {
  const SweepConfig cfg = cfg_in.full_scale ? apply_full_scale(cfg_in) : cfg_in;
  if (cfg.settings == 0) throw std::invalid_argument("run_error_sweep: need settings >= 1");
  if (cfg.fractions.empty() || cfg.sample_sizes.empty() || cfg.methods.empty())
    throw std::invalid_argument("run_error_sweep: fractions, sample sizes and methods "
                                "must be nonempty");

  const GroupSystem base = topology_groups(cfg.topology, cfg.grid_thetas);
  const std::size_t p = base.p();

  struct Prepared {
    MethodSpec spec;
    std::string label;
    GroupSystem sys;
  };
  std::vector<Prepared> prepared;
  prepared.reserve(cfg.methods.size());
  for (const MethodSpec& m : cfg.methods)
    prepared.push_back({m, m.label(),
                        m.method == FitMethod::kLasso
                            ? singleton_groups(p)
                            : assign_weights(base, m.weights, m.rho)});

  ExperimentResult result;
  for (std::size_t n : cfg.sample_sizes) {
    for (std::size_t fi = 0; fi < cfg.fractions.size(); ++fi) {
      const double fraction = cfg.fractions[fi];
      for (std::size_t s = 0; s < cfg.settings; ++s) {
        SyntheticSpec sspec;
        sspec.topology = cfg.topology;
        sspec.hull_size = cfg.hull_size;
        sspec.nonzero_fraction = fraction;
        sspec.n_train = n;
        sspec.n_test = cfg.n_test;
        sspec.seed = instance_seed(cfg.seed, n, fi, s);
        const SyntheticInstance inst = generate_instance(sspec);

        for (const Prepared& m : prepared) {
          const std::vector<double> grid =
              lambda_grid(inst.train, m.sys, cfg.lambda_points, cfg.lambda_min_ratio);
          const auto t0 = std::chrono::steady_clock::now();
          const CvFit fit =
              fit_with_cv(inst.train, m.sys, m.spec.method, grid, cfg.k_folds, cfg.solver);
          const auto t1 = std::chrono::steady_clock::now();

          RunRecord rec;
          rec.method = m.label;
          rec.n = n;
          rec.fraction = fraction;
          rec.setting = s;
          rec.seed = sspec.seed;
          rec.error = prediction_error(fit.refit, inst.w_true, inst.test);
          rec.pattern = fit.pattern;
          rec.support_size = fit.pattern.count();
          rec.pattern_in_family = hull(fit.pattern, m.sys) == fit.pattern;
          rec.chosen_lambdas = fit.chosen_lambdas;
          rec.seconds = std::chrono::duration<double>(t1 - t0).count();
          result.runs.push_back(std::move(rec));
        }
      }
    }
  }

  for (const Prepared& m : prepared) {
    for (std::size_t n : cfg.sample_sizes) {
      for (double fraction : cfg.fractions) {
        std::vector<double> errors, support_fractions;
        for (const RunRecord& r : result.runs) {
          if (r.method != m.label || r.n != n || r.fraction != fraction) continue;
          errors.push_back(r.error);
          support_fractions.push_back(static_cast<double>(r.support_size) /
                                      static_cast<double>(p));
        }
        std::sort(errors.begin(), errors.end());
        std::sort(support_fractions.begin(), support_fractions.end());
        SummaryRecord sr;
        sr.method = m.label;
        sr.n = n;
        sr.fraction = fraction;
        sr.runs = errors.size();
        sr.median_error = quantile_sorted(errors, 0.5);
        sr.q1_error = quantile_sorted(errors, 0.25);
        sr.q3_error = quantile_sorted(errors, 0.75);
        sr.median_support_fraction = quantile_sorted(support_fractions, 0.5);
        result.summary.push_back(std::move(sr));
      }
    }
  }
  return result;
}

TimingStudyResult run_timing_study(const TimingConfig& cfg) {
  if (cfg.grid_sides.empty())
    throw std::invalid_argument("run_timing_study: need at least one grid side");
  if (cfg.settings == 0) throw std::invalid_argument("run_timing_study: need settings >= 1");
  if (cfg.k_folds < 2) throw std::invalid_argument("run_timing_study: need at least two folds");
  if (cfg.smax_factor == 0)
    throw std::invalid_argument("run_timing_study: need a positive budget factor");

  TimingStudyResult out;
  const std::size_t s_max = cfg.smax_factor * cfg.hull_size;
  for (std::size_t side : cfg.grid_sides) {
    const std::size_t p = side * side;
    const GroupSystem sys =
        assign_weights(grid_groups(side, side, pi_over_four_thetas()), cfg.weights, cfg.rho);
    const VariableSet allv = VariableSet::all(p);

    for (std::size_t s = 0; s < cfg.settings; ++s) {
      SyntheticSpec sspec;
      sspec.topology = GridTopology{side, side};
      sspec.hull_size = cfg.hull_size;
      sspec.nonzero_fraction = cfg.nonzero_fraction;
      sspec.n_train = cfg.n_train;
      sspec.n_test = cfg.n_test;
      sspec.seed = instance_seed(cfg.seed, p, s, 0);
      const SyntheticInstance inst = generate_instance(sspec);
      const std::vector<double> grid =
          lambda_grid(inst.train, sys, cfg.lambda_points, cfg.lambda_min_ratio);
      const std::vector<Fold> folds = make_folds(inst.train, cfg.k_folds);

      std::vector<double> score_direct(grid.size(), 0.0);
      const auto d0 = std::chrono::steady_clock::now();
      for (const Fold& fold : folds) {
        const QuadraticLoss loss = QuadraticLoss::from_data(fold.fit);
        Eigen::VectorXd warm = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
        for (std::size_t i = 0; i < grid.size(); ++i) {
          const FitResult fit =
              solve_lambda_form_reduced(loss, sys, allv, grid[i], cfg.solver, &warm);
          warm = fit.w;
          const Eigen::VectorXd resid = fold.val.y - fold.val.X * fit.w;
          score_direct[i] += resid.squaredNorm() / static_cast<double>(fold.val.n());
        }
      }
      const auto d1 = std::chrono::steady_clock::now();

      std::vector<double> score_active(grid.size(), 0.0);
      const auto a0 = std::chrono::steady_clock::now();
      for (const Fold& fold : folds) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
          const ActiveSetResult res =
              active_set_solve(fold.fit, sys, grid[i], cfg.eps, s_max, cfg.solver);
          const Eigen::VectorXd resid = fold.val.y - fold.val.X * res.fit.w;
          score_active[i] += resid.squaredNorm() / static_cast<double>(fold.val.n());
        }
      }
      const auto a1 = std::chrono::steady_clock::now();

      out.records.push_back(
          {"active_set", p, s, std::chrono::duration<double>(a1 - a0).count()});
      out.records.push_back({"direct", p, s, std::chrono::duration<double>(d1 - d0).count()});
    }
  }

  for (const std::string& method : {std::string("active_set"), std::string("direct")}) {
    MethodScaling sc;
    sc.method = method;
    for (std::size_t side : cfg.grid_sides) {
      const std::size_t p = side * side;
      std::vector<double> seconds;
      for (const TimingRecord& r : out.records)
        if (r.method == method && r.p == p) seconds.push_back(r.seconds);
      std::sort(seconds.begin(), seconds.end());
      sc.p.push_back(p);
      sc.median_seconds.push_back(quantile_sorted(seconds, 0.5));
    }
    if (sc.p.size() >= 2) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < sc.p.size(); ++i) {
        mx += std::log(static_cast<double>(sc.p[i]));
        my += std::log(sc.median_seconds[i]);
      }
      mx /= static_cast<double>(sc.p.size());
      my /= static_cast<double>(sc.p.size());
      double sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < sc.p.size(); ++i) {
        const double dx = std::log(static_cast<double>(sc.p[i])) - mx;
        sxy += dx * (std::log(sc.median_seconds[i]) - my);
        sxx += dx * dx;
      }
      sc.slope = sxy / sxx;
    }
    out.scaling.push_back(std::move(sc));
  }
  return out;
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace

void write_runs_csv(const std::vector<RunRecord>& runs, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "method,n,fraction,setting,seed,error,support_size,pattern_in_family,seconds,"
         "chosen_lambdas,pattern\n";
  for (const RunRecord& r : runs) {
    out << r.method << ',' << r.n << ',' << format_double(r.fraction) << ',' << r.setting
        << ',' << r.seed << ',' << format_double(r.error) << ',' << r.support_size << ','
        << (r.pattern_in_family ? 1 : 0) << ',' << format_double(r.seconds) << ','
        << join_doubles(r.chosen_lambdas) << ',' << join_sizes(r.pattern.members()) << '\n';
  }
}

void write_summary_csv(const std::vector<SummaryRecord>& rows, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "method,n,fraction,runs,median_error,q1_error,q3_error,median_support_fraction\n";
  for (const SummaryRecord& r : rows) {
    out << r.method << ',' << r.n << ',' << format_double(r.fraction) << ',' << r.runs << ','
        << format_double(r.median_error) << ',' << format_double(r.q1_error) << ','
        << format_double(r.q3_error) << ',' << format_double(r.median_support_fraction)
        << '\n';
  }
}

void write_timing_csv(const TimingStudyResult& result, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "method,p,setting,seconds\n";
  for (const TimingRecord& r : result.records)
    out << r.method << ',' << r.p << ',' << r.setting << ',' << format_double(r.seconds)
        << '\n';
}

void write_scaling_csv(const TimingStudyResult& result, const std::string& path) {
  std::ofstream out = open_csv(path);
  out << "method,p,median_seconds,slope\n";
  for (const MethodScaling& sc : result.scaling)
    for (std::size_t i = 0; i < sc.p.size(); ++i)
      out << sc.method << ',' << sc.p[i] << ',' << format_double(sc.median_seconds[i]) << ','
          << format_double(sc.slope) << '\n';
}

Topology topology_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "sequence") return SequenceTopology{j.at("l").get<std::size_t>()};
  if (kind == "grid")
    return GridTopology{j.at("h").get<std::size_t>(), j.at("l").get<std::size_t>()};
  throw std::invalid_argument("unknown topology kind: " + kind);
}

nlohmann::json topology_to_json(const Topology& topology) {
  if (const auto* seq = std::get_if<SequenceTopology>(&topology))
    return {{"kind", "sequence"}, {"l", seq->l}};
  if (const auto* grid = std::get_if<GridTopology>(&topology))
    return {{"kind", "grid"}, {"h", grid->h}, {"l", grid->l}};
  throw std::invalid_argument("custom topologies have no JSON form");
}

namespace {

SolverConfig solver_config_from_json(const nlohmann::json& j, SolverConfig base) {
  base.max_iters = j.value("max_iters", base.max_iters);
  base.eta_floor_rel = j.value("eta_floor_rel", base.eta_floor_rel);
  base.w_tol_rel = j.value("w_tol_rel", base.w_tol_rel);
  base.gap_tol = j.value("gap_tol", base.gap_tol);
  base.support_tol_rel = j.value("support_tol_rel", base.support_tol_rel);
  base.dual_exact_limit = j.value("dual_exact_limit", base.dual_exact_limit);
  base.dual_tol = j.value("dual_tol", base.dual_tol);
  return base;
}

std::optional<double> rho_from_json(const nlohmann::json& j, std::optional<double> base) {
  if (!j.contains("rho")) return base;
  if (j.at("rho").is_null()) return std::nullopt;
  return j.at("rho").get<double>();
}

}  // namespace

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  if (j.contains("topology")) spec.topology = topology_from_json(j.at("topology"));
  spec.hull_size = j.value("hull_size", spec.hull_size);
  spec.nonzero_fraction = j.value("nonzero_fraction", spec.nonzero_fraction);
  spec.n_train = j.value("n_train", spec.n_train);
  spec.n_test = j.value("n_test", spec.n_test);
  spec.seed = j.value("seed", spec.seed);
  spec.snr = j.value("snr", spec.snr);
  return spec;
}

SweepConfig sweep_config_from_json(const nlohmann::json& j) {
  SweepConfig cfg;
  if (j.contains("topology")) cfg.topology = topology_from_json(j.at("topology"));
  cfg.grid_thetas = j.value("grid_thetas", cfg.grid_thetas);
  cfg.hull_size = j.value("hull_size", cfg.hull_size);
  cfg.fractions = j.value("fractions", cfg.fractions);
  cfg.sample_sizes = j.value("sample_sizes", cfg.sample_sizes);
  cfg.n_test = j.value("n_test", cfg.n_test);
  cfg.settings = j.value("settings", cfg.settings);
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& mj : j.at("methods")) {
      MethodSpec m;
      m.method = fit_method_from_string(mj.at("method").get<std::string>());
      if (mj.contains("weights"))
        m.weights = weight_scheme_from_string(mj.at("weights").get<std::string>());
      m.rho = rho_from_json(mj, m.rho);
      cfg.methods.push_back(m);
    }
  }
  cfg.lambda_points = j.value("lambda_points", cfg.lambda_points);
  cfg.lambda_min_ratio = j.value("lambda_min_ratio", cfg.lambda_min_ratio);
  cfg.k_folds = j.value("k_folds", cfg.k_folds);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.full_scale = j.value("full_scale", cfg.full_scale);
  if (j.contains("solver")) cfg.solver = solver_config_from_json(j.at("solver"), cfg.solver);
  return cfg;
}

TimingConfig timing_config_from_json(const nlohmann::json& j) {
  TimingConfig cfg;
  cfg.grid_sides = j.value("grid_sides", cfg.grid_sides);
  cfg.hull_size = j.value("hull_size", cfg.hull_size);
  cfg.nonzero_fraction = j.value("nonzero_fraction", cfg.nonzero_fraction);
  cfg.n_train = j.value("n_train", cfg.n_train);
  cfg.n_test = j.value("n_test", cfg.n_test);
  cfg.settings = j.value("settings", cfg.settings);
  if (j.contains("weights"))
    cfg.weights = weight_scheme_from_string(j.at("weights").get<std::string>());
  cfg.rho = rho_from_json(j, cfg.rho);
  cfg.lambda_points = j.value("lambda_points", cfg.lambda_points);
  cfg.lambda_min_ratio = j.value("lambda_min_ratio", cfg.lambda_min_ratio);
  cfg.k_folds = j.value("k_folds", cfg.k_folds);
  cfg.eps = j.value("eps", cfg.eps);
  cfg.smax_factor = j.value("smax_factor", cfg.smax_factor);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("solver")) cfg.solver = solver_config_from_json(j.at("solver"), cfg.solver);
  return cfg;
}

}  // namespace slasso
