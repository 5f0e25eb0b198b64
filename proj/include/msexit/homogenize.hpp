#pragma once

#include <vector>

#include "msexit/functions.hpp"
#include "msexit/regime.hpp"
#include "msexit/spline.hpp"
#include "msexit/torus.hpp"

namespace msexit {

// Averaged coefficients at one slow point x.
struct AveragedCoefficients {
  double lambda_bar = 0.0;
  double q_bar = 0.0;
  double J_bar = 0.0;
  double Psi_bar = 0.0;
};

// Residual/normalization diagnostics of the torus solves at one x.
struct CellSolveReport {
  double mu_normalization = 0.0;  // |rho * cell_average(mu) - 1|
  double mu_min = 0.0;
  double centering_residual = 0.0;
  double cell_residual = 0.0;  // relative, discrete operator applied to chi
  double aux_residual = 0.0;
  double chi_mu_mean = 0.0;
  double xi_mu_mean = 0.0;

  void take_worst(const CellSolveReport& other);
};

// Stationary density of the frozen-x fast generator on the torus grid.
// Regime 1: drift b, diffusion sigma^2/2.  Regime 2: drift gamma*b + c,
// diffusion gamma*sigma^2/2; gamma = 0 requires c > 0 and returns the
// occupation density proportional to 1/c.
PeriodicField invariant_measure(const PeriodicCoefficientSet& coeffs, int regime_index, double x,
                                const TorusGrid& grid);

// integral of b(x, .) against mu; must vanish for regime-1 homogenization.
double check_centering(const PeriodicCoefficientSet& coeffs, double x, const PeriodicField& mu);

// chi solving (b d_y + sigma^2/2 d_yy) chi = -b with zero mu-mean (regime 1).
PeriodicField solve_cell_problem(const PeriodicCoefficientSet& coeffs, double x,
                                 const PeriodicField& mu, const TorusGrid& grid,
                                 double* rel_residual = nullptr);

// Xi_i solving L^i Xi = -(lambda_i - lambda_bar_i) with zero mu-mean.
PeriodicField solve_auxiliary_pde(const PeriodicCoefficientSet& coeffs, int regime_index, double x,
                                  const PeriodicField& mu, const TorusGrid& grid,
                                  double* rel_residual = nullptr);

AveragedCoefficients averaged_coefficients(const PeriodicCoefficientSet& coeffs, int regime_index,
                                           double x, const TorusGrid& grid,
                                           CellSolveReport* report = nullptr);

enum class PointwiseKind { lambda, q, J, Psi };

// Homogenized quantities tabulated on an x grid with cubic interpolation.
struct HomogenizedModel {
  RegimeClassification regime;
  TorusGrid fast_grid;
  Tolerances tol;
  std::vector<double> x_grid;
  std::vector<double> lambda_tab, q_tab, J_tab, Psi_tab;
  CellSolveReport worst;

  std::vector<PeriodicField> mu_tab, chi_tab, xi_tab;
  std::vector<PeriodicField> lambda_y_tab, q_y_tab, J_y_tab, Psi_y_tab;

  double lambda_bar(double x) const { return lambda_spline.eval(x); }
  double dlambda_bar(double x) const { return lambda_spline.deriv(x); }
  double q_bar(double x) const { return q_spline.eval(x); }
  double J_bar(double x) const { return J_spline.eval(x); }
  double Psi_bar(double x) const { return Psi_spline.eval(x); }

  // y-pointwise integrands, cubically interpolated across the x tabulation
  double pointwise(PointwiseKind kind, double x, double y) const;

  // tabulated fields at the nearest x node
  const PeriodicField& mu_field(double x) const;
  const PeriodicField& chi_field(double x) const;
  const PeriodicField& xi_field(double x) const;

  CubicSpline lambda_spline, q_spline, J_spline, Psi_spline;
};

HomogenizedModel build_homogenized_model(const PeriodicCoefficientSet& coeffs,
                                         const RegimeClassification& regime,
                                         const std::vector<double>& x_grid,
                                         const TorusGrid& fast_grid, const Tolerances& tol = {});

}  // namespace msexit
