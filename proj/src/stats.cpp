#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mesozeta/experiments.hpp"

namespace mesozeta {

LinearFit fit_loglinear(std::span<const double> x, std::span<const double> logp,
                        std::span<const double> weights) {
  if (x.size() != logp.size()) throw std::invalid_argument("fit: x and y differ in length");
  if (!weights.empty() && weights.size() != x.size()) {
    throw std::invalid_argument("fit: one weight per point is required");
  }
  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(w(i) >= 0) || !std::isfinite(w(i))) throw std::invalid_argument("fit: bad weight");
    sw += w(i);
    sx += w(i) * x[i];
    sy += w(i) * logp[i];
  }
  if (!(sw > 0)) throw std::invalid_argument("fit: no weighted points");
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = logp[i] - my;
    sxx += w(i) * dx * dx;
    sxy += w(i) * dx * dy;
    syy += w(i) * dy * dy;
  }
  if (!(sxx > 0)) throw std::invalid_argument("fit: needs two distinct x values");
  LinearFit f;
  f.points = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = logp[i] - (f.intercept + f.slope * x[i]);
    ss_res += w(i) * r * r;
  }
  f.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return f;
}

double predicted_tail_g(double y, double t_prime) {
  return y * std::exp(-2.0 * y - y * y / t_prime);
}

TailEstimate estimate_tail(std::span<const double> values, std::span<const double> y_grid,
                           double t_prime) {
  if (values.empty()) throw std::invalid_argument("tail of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  TailEstimate t;
  t.n = sorted.size();
  const double n = static_cast<double>(t.n);
  std::vector<double> fx, fy, fw;
  for (double y : y_grid) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), y);
    const double p = static_cast<double>(above) / n;
    const double se = std::sqrt(p * (1 - p) / n);
    t.y.push_back(y);
    t.emp_p.push_back(p);
    t.se.push_back(se);
    t.predicted_g.push_back(std::isnan(t_prime) ? kNaN : predicted_tail_g(y, t_prime));
    if (p > 0 && p < 1) {
      fx.push_back(y);
      fy.push_back(std::log(p));
      fw.push_back((p / se) * (p / se));
    }
  }
  if (fx.size() >= 2) t.fit = fit_loglinear(fx, fy, fw);
  return t;
}

double ks_distance(std::span<const double> values, const std::function<double(double)>& cdf) {
  if (values.empty()) throw std::invalid_argument("KS of an empty sample");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  // Exact sup for any right-continuous cdf: compare at each distinct value and
  // at its left limit, taken one ulp below.
  double d = 0;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    const double below = cdf(std::nextafter(s[i], -std::numeric_limits<double>::infinity()));
    const double at = cdf(s[i]);
    d = std::max({d, std::fabs(static_cast<double>(i) / n - below), std::fabs(static_cast<double>(j) / n - at)});
    i = j;
  }
  return std::clamp(d, 0.0, 1.0);
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normalized_trapezoid_exp2(std::span<const double> v, double spacing, double width) {
  if (v.size() < 2) throw std::invalid_argument("trapezoid needs two points");
  double s = 0.5 * (std::exp(2 * v.front()) + std::exp(2 * v.back()));
  for (std::size_t i = 1; i + 1 < v.size(); ++i) s += std::exp(2 * v[i]);
  return s * spacing / width;
}

}  // namespace mesozeta
