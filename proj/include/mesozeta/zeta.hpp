#pragma once

#include <complex>
#include <cstddef>

namespace mesozeta {

struct ZetaSample {
  double t = 0.0;
  double z = 0.0;         // Hardy Z(t)
  double theta = 0.0;     // theta(t), not reduced
  double abs_zeta = 0.0;  // |zeta(1/2+it)| = |Z(t)|
  double error = 0.0;     // bound on the truncation error in Z
};

struct EulerMaclaurinResult {
  std::complex<double> value;
  double error_bound = 0.0;  // truncation bound; excludes floating-point rounding
  std::size_t terms = 0;     // direct-sum length N
  int order = 0;             // Bernoulli terms used
};

// Riemann-Siegel theta by its asymptotic series
//   t/2 log(t/2pi) - t/2 - pi/8 + 1/(48t) + 7/(5760t^3) + 31/(80640t^5).
// Throws DomainError for t < 1.
double rs_theta(double t);

// Z(t) by the Riemann-Siegel formula with `terms` corrections C0..C(terms-1),
// terms in [1, 4]. The error field is Gabcke's bound for that many terms.
// Throws DomainError for t < 50; use zeta_euler_maclaurin there.
ZetaSample zeta_riemann_siegel(double t, int terms = 4);

// zeta(sigma+it) by Euler-Maclaurin with a direct sum of `terms` terms and as
// many Bernoulli corrections (up to max_order) as keep shrinking. The bound is
// |s+2M+1|/(sigma+2M+1) times the first omitted correction. Throws DomainError
// at s = 1.
EulerMaclaurinResult zeta_euler_maclaurin(double sigma, double t, std::size_t terms,
                                          int max_order = 60);

// A direct-sum length that makes the Euler-Maclaurin tail negligible at height t.
std::size_t em_default_terms(double t);

// Z(t) on whichever path applies (Riemann-Siegel for t >= 50).
ZetaSample hardy_z(double t);

struct IntervalMax {
  double argmax_h = 0.0;
  double max_log_abs = 0.0;  // max of log|zeta(1/2+i(tau+h))| over the grid
  std::size_t grid_size = 0;
};

// Largest power of ten <= tau.
double height_scale(double tau);

// Maximum of log|zeta| over the grid of half-width (log T)^theta and the
// given spacing about tau, T = height_scale(tau). Ties go to the smaller h.
IntervalMax max_zeta_on_interval(double tau, double theta, double spacing, unsigned workers = 1);

}  // namespace mesozeta
