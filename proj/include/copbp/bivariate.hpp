#pragma once

namespace copbp {

/// P(X <= x, Y <= y) for a standard bivariate normal with correlation rho.
/// Drezner-Wesolowsky/Genz Gauss-Legendre scheme, accurate to ~1e-15.
double bivariate_normal_cdf(double x, double y, double rho);

/// Density of the standard bivariate normal.
double bivariate_normal_pdf(double x, double y, double rho);

/// P(X <= x, Y <= y) for a standard bivariate Student t with `nu` degrees of
/// freedom and correlation rho. Integer nu uses the Dunnett-Sobel finite sum;
/// other nu integrate the conditional t distribution numerically.
double bivariate_t_cdf(double x, double y, double rho, double nu);

/// d/drho of bivariate_t_cdf.
double bivariate_t_cdf_drho(double x, double y, double rho, double nu);

double student_t_cdf(double x, double nu);
double student_t_quantile(double p, double nu);

}  // namespace copbp
