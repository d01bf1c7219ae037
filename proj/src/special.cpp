#include "sdmh/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "sdmh/errors.hpp"

namespace sdmh {
namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 100000;

// Bernoulli numbers B_2, B_4, ..., B_18.
constexpr std::array<double, 9> kBernoulli = {
    1.0 / 6.0,     -1.0 / 30.0, 1.0 / 42.0,       -1.0 / 30.0,    5.0 / 66.0,
    -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0, 43867.0 / 798.0};

// B_2k / (2k (2k - 1)) and B_2k / 2k.
constexpr std::array<double, 7> kLogGammaCoef = {
    1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0,
    1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0};
constexpr std::array<double, 7> kDigammaCoef = {
    1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0,
    1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0};

// zeta(k) - 1 for k = 0..kZetaTerms-1 (entries 0 and 1 unused).
constexpr int kZetaTerms = 64;

std::array<double, kZetaTerms> make_zeta_minus_one() {
  std::array<double, kZetaTerms> z{};
  constexpr int N = 50;
  for (int k = 2; k < kZetaTerms; ++k) {
    const double kd = k;
    // Euler-Maclaurin tail from N onwards.
    const double nk = std::pow(static_cast<double>(N), -kd);
    double tail = N * nk / (kd - 1.0) + 0.5 * nk + kd * nk / (12.0 * N) -
                  kd * (kd + 1) * (kd + 2) * nk / (720.0 * N * N * N) +
                  kd * (kd + 1) * (kd + 2) * (kd + 3) * (kd + 4) * nk /
                      (30240.0 * std::pow(static_cast<double>(N), 5));
    double sum = tail;
    for (int n = N - 1; n >= 2; --n) sum += std::pow(static_cast<double>(n), -kd);
    z[k] = sum;
  }
  return z;
}

const std::array<double, kZetaTerms>& zeta_minus_one() {
  static const std::array<double, kZetaTerms> table = make_zeta_minus_one();
  return table;
}

// sum_{k>=2} (-1)^k (zeta(k) - 1) z^k / k for |z| <= 0.5.
double zeta_series(double z) {
  const auto& zm1 = zeta_minus_one();
  double term_power = z * z;
  double sum = 0.0;
  for (int k = 2; k < kZetaTerms; ++k) {
    const double t = zm1[k] * term_power / k;
    sum += (k % 2 == 0) ? t : -t;
    if (std::abs(t) < 1e-18 * std::abs(sum)) break;
    term_power *= z;
  }
  return sum;
}

double stirling_log_gamma(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double corr = 0.0;
  double p = inv;
  for (std::size_t k = 0; k < 8; ++k) {
    const double n = 2.0 * static_cast<double>(k + 1);
    corr += kBernoulli[k] / (n * (n - 1.0)) * p;
    p *= inv2;
  }
  return (x - 0.5) * std::log(x) - x + 0.5 * kLn2Pi + corr;
}

[[noreturn]] void throw_not_positive(double x, const char* name) {
  throw DomainError(std::string(name) + ": argument must be positive and finite, got " +
                    std::to_string(x));
}

inline void require_positive(double x, const char* name) {
  if (!(x > 0.0 && x <= std::numeric_limits<double>::max())) [[unlikely]]
    throw_not_positive(x, name);
}

// Modified Lentz continued fraction for I_x(a, b).
double beta_cf(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

// ln I_x(a, b) with y = 1 - x supplied separately to avoid cancellation.
double log_beta_inc(double a, double b, double x, double y) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  if (y <= 0.0) return 0.0;
  const double log_front = a * std::log(x) + b * std::log(y) - log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return log_front - std::log(a) + std::log(beta_cf(a, b, x));
  }
  const double upper = std::exp(log_front - std::log(b) + std::log(beta_cf(b, a, y)));
  return std::log1p(-std::min(upper, 1.0));
}

struct GammaTail {
  bool series;     // true: value holds ln P, otherwise ln Q
  double log_value;
};

GammaTail incomplete_gamma(double a, double x) {
  const double log_prefix = -x + a * std::log(x) - log_gamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < kMaxIter; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * kEps) return {true, std::log(sum) + log_prefix};
    }
    throw NumericalError("incomplete gamma series did not converge");
  }
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return {false, std::log(h) + log_prefix};
  }
  throw NumericalError("incomplete gamma continued fraction did not converge");
}

void check_gamma_args(double a, double x) {
  require_positive(a, "incomplete gamma shape");
  if (!(x >= 0.0)) throw DomainError("incomplete gamma: x must be nonnegative");
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  if (x >= 10.0) return stirling_log_gamma(x);
  if (x >= 2.5) {
    // Shift up into the asymptotic range.
    double prod = 1.0;
    double shifted = x;
    while (shifted < 10.0) {
      prod *= shifted;
      shifted += 1.0;
    }
    return stirling_log_gamma(shifted) - std::log(prod);
  }
  if (x >= 1.5) {
    const double z = x - 2.0;
    return (1.0 - kEulerGamma) * z + zeta_series(z);
  }
  if (x >= 0.5) {
    const double z = x - 1.0;
    return (1.0 - kEulerGamma) * z - std::log1p(z) + zeta_series(z);
  }
  // ln Gamma(x) = ln Gamma(1 + x) - ln x
  return (1.0 - kEulerGamma) * x - std::log1p(x) + zeta_series(x) - std::log(x);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  double series = 0.0;
  double p = inv2;
  for (std::size_t k = 0; k < 7; ++k) {
    const double n = 2.0 * static_cast<double>(k + 1);
    series += kBernoulli[k] / n * p;
    p *= inv2;
  }
  return shift + std::log(x) - 0.5 / x - series;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double shift = 0.0;
  while (x < 10.0) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double p = inv * inv2;
  for (std::size_t k = 0; k < 8; ++k) {
    series += kBernoulli[k] * p;
    p *= inv2;
  }
  return shift + inv + 0.5 * inv2 + series;
}

GammaTriple gamma_triple(double x) {
  require_positive(x, "gamma_triple");
  // Shift into the asymptotic range while tracking P(t) = prod (x_i + t) and
  // its first two derivatives at t = 0: sum 1/x_i = P'/P and
  // sum 1/x_i^2 = (P'/P)^2 - P''/P.
  double prod = 1.0;
  double d1 = 0.0;
  double d2 = 0.0;
  while (x < 10.0) {
    d2 = d2 * x + 2.0 * d1;
    d1 = d1 * x + prod;
    prod *= x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double lx = std::log(x);
  const std::size_t terms = x > 200.0 ? 3 : (x > 40.0 ? 5 : 7);
  double lcorr = 0.0;
  double dseries = 0.0;
  double tseries = 0.0;
  double p = inv;
  for (std::size_t k = 0; k < terms; ++k) {
    lcorr += kLogGammaCoef[k] * p;
    dseries += kDigammaCoef[k] * (p * inv);
    tseries += kBernoulli[k] * (p * inv2);
    p *= inv2;
  }
  double dshift = 0.0;
  double tshift = 0.0;
  double lshift = 0.0;
  if (prod != 1.0) {
    const double ip = 1.0 / prod;
    const double s1 = d1 * ip;
    dshift = -s1;
    tshift = s1 * s1 - d2 * ip;
    lshift = std::log(prod);
  }
  GammaTriple r;
  r.log_gamma = (x - 0.5) * lx - x + 0.5 * kLn2Pi + lcorr - lshift;
  r.digamma = dshift + lx - 0.5 * inv - dseries;
  r.trigamma = tshift + inv + 0.5 * inv2 + tseries;
  return r;
}

double log_gamma_fast(double x) {
  require_positive(x, "log_gamma_fast");
  double prod = 1.0;
  while (x < 10.0) {
    prod *= x;
    x += 1.0;
  }
  return stirling_log_gamma(x) - (prod == 1.0 ? 0.0 : std::log(prod));
}

double log_beta(double a, double b) {
  require_positive(a, "log_beta");
  require_positive(b, "log_beta");
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double gamma_p(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const GammaTail t = incomplete_gamma(a, x);
  return t.series ? std::exp(t.log_value) : -std::expm1(t.log_value);
}

double gamma_q(double a, double x) {
  return std::exp(log_gamma_q(a, x));
}

double log_gamma_q(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
  const GammaTail t = incomplete_gamma(a, x);
  if (!t.series) return t.log_value;
  return std::log1p(-std::exp(t.log_value));
}

double beta_inc(double a, double b, double x) {
  require_positive(a, "beta_inc");
  require_positive(b, "beta_inc");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("beta_inc: x must lie in [0, 1]");
  return std::exp(log_beta_inc(a, b, x, 1.0 - x));
}

double chi2_log_sf(double x, int k) {
  if (k < 1) throw DegreesOfFreedomError("chi2_sf: degrees of freedom must be >= 1");
  if (!(x >= 0.0)) throw DomainError("chi2_sf: statistic must be nonnegative");
  return log_gamma_q(0.5 * k, 0.5 * x);
}

double chi2_sf(double x, int k) { return std::exp(chi2_log_sf(x, k)); }

double f_log_sf(double f, int d1, int d2) {
  if (d1 < 1 || d2 < 1) throw DegreesOfFreedomError("f_sf: degrees of freedom must be >= 1");
  if (!(f >= 0.0)) throw DomainError("f_sf: statistic must be nonnegative");
  if (f == 0.0) return 0.0;
  if (std::isinf(f)) return -std::numeric_limits<double>::infinity();
  const double denom = d2 + d1 * f;
  return log_beta_inc(0.5 * d2, 0.5 * d1, d2 / denom, d1 * f / denom);
}

double f_sf(double f, int d1, int d2) { return std::exp(f_log_sf(f, d1, d2)); }

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace sdmh
