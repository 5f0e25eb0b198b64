#include "msexit/homogenize.hpp"

#include <algorithm>
#include <cmath>

#include "msexit/spectral.hpp"

namespace msexit {

void CellSolveReport::take_worst(const CellSolveReport& o) {
  mu_normalization = std::max(mu_normalization, o.mu_normalization);
  mu_min = std::min(mu_min, o.mu_min);
  centering_residual = std::max(std::abs(centering_residual), std::abs(o.centering_residual));
  cell_residual = std::max(cell_residual, o.cell_residual);
  aux_residual = std::max(aux_residual, o.aux_residual);
  chi_mu_mean = std::max(std::abs(chi_mu_mean), std::abs(o.chi_mu_mean));
  xi_mu_mean = std::max(std::abs(xi_mu_mean), std::abs(o.xi_mu_mean));
}

namespace {

std::vector<double> sample_coeff(const CoefficientField& f, double x, const TorusGrid& g) {
  std::vector<double> v(g.n_points);
  for (int k = 0; k < g.n_points; ++k) v[k] = f.eval(x, g.node(k));
  return v;
}

double weighted_mean(const std::vector<double>& f, const PeriodicField& mu) {
  double acc = 0.0;
  const double h = mu.grid.spacing();
  for (int k = 0; k < mu.grid.n_points; ++k) acc += f[k] * mu.values[k];
  return acc * h;
}

double linf(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void check_regime_index(int regime_index) {
  if (regime_index != 1 && regime_index != 2)
    throw ConfigError("homogenize: regime index must be 1 or 2");
}

// drift/diffusion of the frozen-x fast generator
struct FrozenGenerator {
  std::vector<double> drift, diff;
};

FrozenGenerator frozen_generator(const PeriodicCoefficientSet& coeffs, int regime_index, double x,
                                 const TorusGrid& grid) {
  FrozenGenerator gen;
  const int n = grid.n_points;
  gen.drift.resize(n);
  gen.diff.resize(n);
  for (int k = 0; k < n; ++k) {
    const double y = grid.node(k);
    const double bv = coeffs.b.eval(x, y);
    const double sv = coeffs.sigma.eval(x, y);
    if (regime_index == 1) {
      gen.drift[k] = bv;
      gen.diff[k] = 0.5 * sv * sv;
    } else {
      if (std::isinf(coeffs.gamma))
        throw ConfigError("homogenize: regime 2 requires finite gamma");
      gen.drift[k] = coeffs.gamma * bv + coeffs.c.eval(x, y);
      gen.diff[k] = 0.5 * coeffs.gamma * sv * sv;
    }
  }
  return gen;
}

DenseMatrix generator_matrix(const FrozenGenerator& gen, const DenseMatrix& D1,
                             const DenseMatrix& D2) {
  const int n = D1.n;
  DenseMatrix A(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      A.at(j, k) = gen.drift[j] * D1.at(j, k) + gen.diff[j] * D2.at(j, k);
  return A;
}

// Solve A u = rhs with one row replaced by the mu-weighted zero-mean
// constraint; the row with the largest density is sacrificed so the dropped
// equation's residual stays controlled by the Fredholm defect.
struct ConstrainedSolver {
  DenseMatrix A;  // original operator, kept for residuals
  DenseLU lu;
  int replaced_row = 0;

  void setup(DenseMatrix A_in, const PeriodicField& mu) {
    A = std::move(A_in);
    const int n = A.n;
    replaced_row = static_cast<int>(std::max_element(mu.values.begin(), mu.values.end()) -
                                    mu.values.begin());
    DenseMatrix B = A;
    const double h = mu.grid.spacing();
    for (int k = 0; k < n; ++k) B.at(replaced_row, k) = mu.values[k] * h;
    lu.factor(B);
  }

  std::vector<double> solve(std::vector<double> rhs, double* rel_residual) const {
    std::vector<double> full_rhs = rhs;
    rhs[replaced_row] = 0.0;
    auto u = lu.solve(std::move(rhs));
    if (rel_residual) {
      const auto Au = A.apply(u);
      const double scale = std::max(1.0, linf(full_rhs));
      double res = 0.0;
      for (int j = 0; j < A.n; ++j) res = std::max(res, std::abs(Au[j] - full_rhs[j]));
      *rel_residual = res / scale;
    }
    return u;
  }
};

PeriodicField occupation_density_gamma0(const PeriodicCoefficientSet& coeffs, double x,
                                        const TorusGrid& grid) {
  const auto cv = sample_coeff(coeffs.c, x, grid);
  for (double v : cv)
    if (!(v > 0.0))
      throw ConfigError("invariant_measure: gamma = 0 requires c > 0 on the torus");
  PeriodicField mu;
  mu.grid = grid;
  mu.values.resize(grid.n_points);
  double Z = 0.0;
  for (double v : cv) Z += 1.0 / v;
  Z *= grid.spacing();
  for (int k = 0; k < grid.n_points; ++k) mu.values[k] = 1.0 / (cv[k] * Z);
  return mu;
}

}  // namespace

PeriodicField invariant_measure(const PeriodicCoefficientSet& coeffs, int regime_index, double x,
                                const TorusGrid& grid) {
  check_regime_index(regime_index);
  grid.validate();
  if (regime_index == 2 && coeffs.gamma == 0.0) return occupation_density_gamma0(coeffs, x, grid);

  const int n = grid.n_points;
  const double h = grid.spacing();
  const auto gen = frozen_generator(coeffs, regime_index, x, grid);
  const DenseMatrix D1 = fourier_diff1(grid);
  const DenseMatrix D2 = fourier_diff2(grid);
  // stationary equation in adjoint (Fokker-Planck) form:
  //   -d_y(drift mu) + d_yy(diff mu) = 0, normalized to total mass 1
  DenseMatrix M(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      M.at(j, k) = -D1.at(j, k) * gen.drift[k] + D2.at(j, k) * gen.diff[k];
  for (int k = 0; k < n; ++k) M.at(0, k) = h;
  std::vector<double> rhs(n, 0.0);
  rhs[0] = 1.0;
  DenseLU lu;
  lu.factor(M);
  auto sol = lu.solve(std::move(rhs));

  const double mx = linf(sol);
  for (double& v : sol) {
    if (v < -1e-8 * mx)
      throw SolverError("invariant_measure: density has negative values; refine the grid");
    if (v < 0.0) v = 0.0;
  }
  PeriodicField mu;
  mu.grid = grid;
  mu.values = std::move(sol);
  return mu;
}

double check_centering(const PeriodicCoefficientSet& coeffs, double x, const PeriodicField& mu) {
  mu.validate();
  return weighted_mean(sample_coeff(coeffs.b, x, mu.grid), mu);
}

namespace {

PeriodicField cell_problem_impl(const PeriodicCoefficientSet& coeffs, double x,
                                const PeriodicField& mu, const TorusGrid& grid,
                                const DenseMatrix& D1, const DenseMatrix& D2,
                                double* rel_residual) {
  const double centering = check_centering(coeffs, x, mu);
  if (std::abs(centering) > 1e-6)
    throw InvariantError("cell problem unsolvable: centering residual " +
                         std::to_string(centering));
  const auto gen = frozen_generator(coeffs, 1, x, grid);
  ConstrainedSolver solver;
  solver.setup(generator_matrix(gen, D1, D2), mu);
  auto rhs = sample_coeff(coeffs.b, x, grid);
  for (double& v : rhs) v = -v;
  PeriodicField chi;
  chi.grid = grid;
  chi.values = solver.solve(std::move(rhs), rel_residual);
  return chi;
}

struct AuxResult {
  PeriodicField xi;
  std::vector<double> lambda;  // pointwise lambda_i(x, y_k)
  double lambda_bar = 0.0;
  double residual = 0.0;
};

// lambda samples must match the regime: (1 + chi')c for regime 1, gamma*b + c
// for regime 2.
AuxResult auxiliary_impl(const PeriodicCoefficientSet& coeffs, int regime_index, double x,
                         const PeriodicField& mu, const TorusGrid& grid, const DenseMatrix& D1,
                         const DenseMatrix& D2, std::vector<double> lambda) {
  AuxResult out;
  const int n = grid.n_points;
  out.lambda_bar = weighted_mean(lambda, mu);
  std::vector<double> g(n);
  for (int k = 0; k < n; ++k) g[k] = lambda[k] - out.lambda_bar;
  out.lambda = std::move(lambda);

  if (regime_index == 2 && coeffs.gamma == 0.0) {
    // pure transport c Xi' = -g: integrate spectrally, then shift to zero
    // mu-mean
    const auto cv = sample_coeff(coeffs.c, x, grid);
    PeriodicField v;
    v.grid = grid;
    v.values.resize(n);
    for (int k = 0; k < n; ++k) v.values[k] = -g[k] / cv[k];
    PeriodicField P = spectral_antiderivative(v);
    const double shift = weighted_mean(P.values, mu);
    for (double& w : P.values) w -= shift;
    const auto dP = D1.apply(P.values);
    double res = 0.0;
    for (int k = 0; k < n; ++k) res = std::max(res, std::abs(cv[k] * dP[k] + g[k]));
    out.residual = res / std::max(1.0, linf(g));
    out.xi = std::move(P);
    return out;
  }

  const auto gen = frozen_generator(coeffs, regime_index, x, grid);
  ConstrainedSolver solver;
  solver.setup(generator_matrix(gen, D1, D2), mu);
  std::vector<double> rhs(n);
  for (int k = 0; k < n; ++k) rhs[k] = -g[k];
  out.xi.grid = grid;
  out.xi.values = solver.solve(std::move(rhs), &out.residual);
  return out;
}

std::vector<double> lambda_samples(const PeriodicCoefficientSet& coeffs, int regime_index,
                                   double x, const TorusGrid& grid,
                                   const std::vector<double>* one_plus_chip) {
  const int n = grid.n_points;
  std::vector<double> lam(n);
  for (int k = 0; k < n; ++k) {
    const double y = grid.node(k);
    if (regime_index == 1) {
      lam[k] = (*one_plus_chip)[k] * coeffs.c.eval(x, y);
    } else {
      lam[k] = coeffs.gamma * coeffs.b.eval(x, y) + coeffs.c.eval(x, y);
    }
  }
  return lam;
}

}  // namespace

PeriodicField solve_cell_problem(const PeriodicCoefficientSet& coeffs, double x,
                                 const PeriodicField& mu, const TorusGrid& grid,
                                 double* rel_residual) {
  grid.validate();
  mu.validate();
  return cell_problem_impl(coeffs, x, mu, grid, fourier_diff1(grid), fourier_diff2(grid),
                           rel_residual);
}

PeriodicField solve_auxiliary_pde(const PeriodicCoefficientSet& coeffs, int regime_index, double x,
                                  const PeriodicField& mu, const TorusGrid& grid,
                                  double* rel_residual) {
  check_regime_index(regime_index);
  grid.validate();
  mu.validate();
  const DenseMatrix D1 = fourier_diff1(grid);
  const DenseMatrix D2 = fourier_diff2(grid);
  std::vector<double> one_plus_chip;
  const std::vector<double>* chip_ptr = nullptr;
  if (regime_index == 1) {
    const auto chi = cell_problem_impl(coeffs, x, mu, grid, D1, D2, nullptr);
    one_plus_chip = D1.apply(chi.values);
    for (double& v : one_plus_chip) v += 1.0;
    chip_ptr = &one_plus_chip;
  }
  auto res = auxiliary_impl(coeffs, regime_index, x, mu, grid, D1, D2,
                            lambda_samples(coeffs, regime_index, x, grid, chip_ptr));
  if (rel_residual) *rel_residual = res.residual;
  return std::move(res.xi);
}

namespace {

// everything homogenization produces at one slow point
struct PointData {
  PeriodicField mu, chi, xi;
  std::vector<double> lambda_y, q_y, J_y, Psi_y;
  AveragedCoefficients avg;
  CellSolveReport report;
};

struct HomogenizeContext {
  const PeriodicCoefficientSet& coeffs;
  int regime_index;
  TorusGrid grid;
  DenseMatrix D1, D2;

  bool cacheable = false;
  bool cache_ready = false;
  PeriodicField mu_cache;
  PeriodicField chi_cache;
  std::vector<double> one_plus_chip_cache;
  double centering_cache = 0.0, cell_res_cache = 0.0;
  ConstrainedSolver op_cache;  // generator with the constraint row, for aux solves
  bool op_cache_ready = false;

  HomogenizeContext(const PeriodicCoefficientSet& cs, int ri, const TorusGrid& g)
      : coeffs(cs), regime_index(ri), grid(g), D1(fourier_diff1(g)), D2(fourier_diff2(g)) {
    const bool fast_const = cs.b.x_independent() && cs.sigma.x_independent();
    if (ri == 1)
      cacheable = fast_const;
    else
      cacheable = fast_const && cs.c.x_independent() && cs.gamma > 0.0 &&
                  !std::isinf(cs.gamma);
  }

  PointData compute(double x) {
    PointData pd;
    const int n = grid.n_points;

    if (cacheable && cache_ready) {
      pd.mu = mu_cache;
    } else {
      pd.mu = invariant_measure(coeffs, regime_index, x, grid);
    }
    pd.report.mu_normalization = std::abs(grid.period * cell_average(pd.mu) - 1.0);
    pd.report.mu_min = *std::min_element(pd.mu.values.begin(), pd.mu.values.end());

    std::vector<double> one_plus_chip(n, 1.0);
    if (regime_index == 1) {
      if (cacheable && cache_ready) {
        pd.chi = chi_cache;
        one_plus_chip = one_plus_chip_cache;
        pd.report.centering_residual = centering_cache;
        pd.report.cell_residual = cell_res_cache;
      } else {
        pd.report.centering_residual = check_centering(coeffs, x, pd.mu);
        pd.chi = cell_problem_impl(coeffs, x, pd.mu, grid, D1, D2, &pd.report.cell_residual);
        one_plus_chip = D1.apply(pd.chi.values);
        for (double& v : one_plus_chip) v += 1.0;
      }
      pd.report.chi_mu_mean = weighted_mean(pd.chi.values, pd.mu);
    } else {
      pd.chi.grid = grid;
      pd.chi.values.assign(n, 0.0);
    }

    auto lam = lambda_samples(coeffs, regime_index, x, grid,
                              regime_index == 1 ? &one_plus_chip : nullptr);

    AuxResult aux;
    if (cacheable) {
      // frozen operator is x-independent: factor once, back-substitute per x
      if (!op_cache_ready) {
        const auto gen = frozen_generator(coeffs, regime_index, x, grid);
        op_cache.setup(generator_matrix(gen, D1, D2), pd.mu);
        op_cache_ready = true;
      }
      aux.lambda_bar = weighted_mean(lam, pd.mu);
      std::vector<double> rhs(n);
      for (int k = 0; k < n; ++k) rhs[k] = aux.lambda_bar - lam[k];
      aux.xi.grid = grid;
      aux.xi.values = op_cache.solve(std::move(rhs), &aux.residual);
      aux.lambda = std::move(lam);
    } else {
      aux = auxiliary_impl(coeffs, regime_index, x, pd.mu, grid, D1, D2, std::move(lam));
    }
    pd.report.aux_residual = aux.residual;
    pd.report.xi_mu_mean = weighted_mean(aux.xi.values, pd.mu);
    pd.xi = aux.xi;

    const auto xip = D1.apply(pd.xi.values);
    const auto xipp = D2.apply(pd.xi.values);
    pd.lambda_y = aux.lambda;
    pd.q_y.resize(n);
    pd.J_y.resize(n);
    pd.Psi_y.resize(n);
    for (int k = 0; k < n; ++k) {
      const double y = grid.node(k);
      const double sv = coeffs.sigma.eval(x, y);
      const double psiv = coeffs.psi_limit.eval(x, y);
      if (regime_index == 1) {
        pd.q_y[k] = one_plus_chip[k] * one_plus_chip[k] * sv * sv;
        pd.J_y[k] = coeffs.c.eval(x, y) * xip[k];
        pd.Psi_y[k] = one_plus_chip[k] * psiv;
      } else {
        const double op = 1.0 + xip[k];
        pd.q_y[k] = op * op * sv * sv;
        pd.J_y[k] = coeffs.b.eval(x, y) * op + 0.5 * sv * sv * xipp[k];
        pd.Psi_y[k] = op * psiv;
      }
    }
    pd.avg.lambda_bar = aux.lambda_bar;
    pd.avg.q_bar = weighted_mean(pd.q_y, pd.mu);
    pd.avg.J_bar = weighted_mean(pd.J_y, pd.mu);
    pd.avg.Psi_bar = weighted_mean(pd.Psi_y, pd.mu);

    if (cacheable && !cache_ready) {
      mu_cache = pd.mu;
      if (regime_index == 1) {
        chi_cache = pd.chi;
        one_plus_chip_cache = one_plus_chip;
        centering_cache = pd.report.centering_residual;
        cell_res_cache = pd.report.cell_residual;
      }
      cache_ready = true;
    }
    return pd;
  }
};

}  // namespace

AveragedCoefficients averaged_coefficients(const PeriodicCoefficientSet& coeffs, int regime_index,
                                           double x, const TorusGrid& grid,
                                           CellSolveReport* report) {
  check_regime_index(regime_index);
  grid.validate();
  HomogenizeContext ctx(coeffs, regime_index, grid);
  auto pd = ctx.compute(x);
  if (report) *report = pd.report;
  return pd.avg;
}

HomogenizedModel build_homogenized_model(const PeriodicCoefficientSet& coeffs,
                                         const RegimeClassification& regime,
                                         const std::vector<double>& x_grid,
                                         const TorusGrid& fast_grid, const Tolerances& tol) {
  if (x_grid.size() < 2) throw ConfigError("homogenized model: x grid needs >= 2 points");
  for (size_t i = 1; i < x_grid.size(); ++i)
    if (!(x_grid[i] > x_grid[i - 1]))
      throw ConfigError("homogenized model: x grid must be strictly increasing");
  coeffs.validate(x_grid.front(), x_grid.back());

  HomogenizedModel model;
  model.regime = regime;
  model.fast_grid = fast_grid;
  model.tol = tol;
  model.x_grid = x_grid;

  HomogenizeContext ctx(coeffs, regime.regime_index, fast_grid);
  model.worst.mu_min = std::numeric_limits<double>::infinity();
  for (double x : x_grid) {
    auto pd = ctx.compute(x);

    if (pd.report.mu_normalization > tol.normalization)
      throw InvariantError("homogenize: invariant density normalization off by " +
                           std::to_string(pd.report.mu_normalization));
    if (regime.regime_index == 1 && std::abs(pd.report.centering_residual) > tol.residual)
      throw InvariantError("homogenize: centering condition violated, residual " +
                           std::to_string(pd.report.centering_residual));
    if (pd.report.cell_residual > tol.residual || pd.report.aux_residual > tol.residual)
      throw InvariantError("homogenize: torus solve residual above tolerance");
    if (std::abs(pd.report.chi_mu_mean) > tol.residual ||
        std::abs(pd.report.xi_mu_mean) > tol.residual)
      throw InvariantError("homogenize: corrector mean not zero");

    model.worst.take_worst(pd.report);
    model.lambda_tab.push_back(pd.avg.lambda_bar);
    model.q_tab.push_back(pd.avg.q_bar);
    model.J_tab.push_back(pd.avg.J_bar);
    model.Psi_tab.push_back(pd.avg.Psi_bar);
    model.mu_tab.push_back(std::move(pd.mu));
    model.chi_tab.push_back(std::move(pd.chi));
    model.xi_tab.push_back(std::move(pd.xi));
    auto field_of = [&](std::vector<double>&& v) {
      PeriodicField f;
      f.grid = fast_grid;
      f.values = std::move(v);
      return f;
    };
    model.lambda_y_tab.push_back(field_of(std::move(pd.lambda_y)));
    model.q_y_tab.push_back(field_of(std::move(pd.q_y)));
    model.J_y_tab.push_back(field_of(std::move(pd.J_y)));
    model.Psi_y_tab.push_back(field_of(std::move(pd.Psi_y)));
  }

  model.lambda_spline.build(x_grid, model.lambda_tab);
  model.q_spline.build(x_grid, model.q_tab);
  model.J_spline.build(x_grid, model.J_tab);
  model.Psi_spline.build(x_grid, model.Psi_tab);
  return model;
}

double HomogenizedModel::pointwise(PointwiseKind kind, double x, double y) const {
  const std::vector<PeriodicField>* tab = nullptr;
  switch (kind) {
    case PointwiseKind::lambda: tab = &lambda_y_tab; break;
    case PointwiseKind::q: tab = &q_y_tab; break;
    case PointwiseKind::J: tab = &J_y_tab; break;
    case PointwiseKind::Psi: tab = &Psi_y_tab; break;
  }
  std::vector<double> vals(x_grid.size());
  for (size_t i = 0; i < x_grid.size(); ++i) vals[i] = (*tab)[i].eval(y);
  CubicSpline s;
  s.build(x_grid, vals);
  return s.eval(x);
}

namespace {

size_t nearest_index(const std::vector<double>& xs, double x) {
  size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < xs.size(); ++i) {
    const double d = std::abs(xs[i] - x);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

const PeriodicField& HomogenizedModel::mu_field(double x) const {
  return mu_tab[nearest_index(x_grid, x)];
}
const PeriodicField& HomogenizedModel::chi_field(double x) const {
  return chi_tab[nearest_index(x_grid, x)];
}
const PeriodicField& HomogenizedModel::xi_field(double x) const {
  return xi_tab[nearest_index(x_grid, x)];
}

}  // namespace msexit
