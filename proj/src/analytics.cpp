#include "lru/analytics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lru/error.hpp"
#include "lru/lattice.hpp"

namespace lru::analytics {

namespace {

void require_nonnegative(double x, const char* name) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError(std::string(name) + " must be finite and >= 0");
}

}  // namespace

void TwoSiteParams::validate() const {
  if (!(anharmonicity > 0.0)) throw ConfigError("anharmonicity must be > 0");
  require_nonnegative(hopping, "hopping");
  require_nonnegative(rate, "rate");
}

double disintegration_frequency(const TwoSiteParams& p) {
  return std::sqrt(p.anharmonicity * p.anharmonicity + 16.0 * p.hopping * p.hopping);
}

PairPopulations two_site_populations(const TwoSiteParams& p, double t, PairState initial) {
  require_nonnegative(p.hopping, "hopping");
  if (!(p.anharmonicity >= 0.0)) throw ConfigError("anharmonicity must be >= 0");
  const double u = p.anharmonicity;
  const double j = p.hopping;
  const double w = std::sqrt(u * u + 16.0 * j * j);
  PairPopulations out;
  if (w == 0.0) {
    if (initial == PairState::symmetric) out.p20 = out.p02 = 0.5;
    else out.p20 = 1.0;
    return out;
  }
  if (initial == PairState::localized) {
    const double s = u / (2.0 * w) * std::sin(0.5 * w * t);
    const double c = 0.5 * std::cos(0.5 * w * t);
    const double su = 0.5 * std::sin(0.5 * u * t);
    const double cu = 0.5 * std::cos(0.5 * u * t);
    out.p20 = (s + su) * (s + su) + (c + cu) * (c + cu);
    out.p02 = (s - su) * (s - su) + (c - cu) * (c - cu);
    const double sw = std::sin(0.5 * w * t);
    out.p11 = 8.0 * j * j / (w * w) * sw * sw;
  } else {
    const double cw = std::cos(w * t);
    const double leak = u * u / (2.0 * w * w) * (1.0 - cw) + 0.5 * (1.0 + cw);
    out.p20 = out.p02 = 0.5 * leak;
    out.p11 = 8.0 * j * j / (w * w) * (1.0 - cw);
  }
  return out;
}

double disintegration_threshold_residual(double x) {
  const double w = std::sqrt(x * x + 16.0);
  return std::sin(x * kPi / (2.0 * w)) - (8.0 - x * x) / (x * w);
}

ThresholdRoot disintegration_threshold_bisection(double lo, double hi) {
  double flo = disintegration_threshold_residual(lo);
  const double fhi = disintegration_threshold_residual(hi);
  if (!(flo * fhi < 0.0)) throw NumericError("threshold bracket does not change sign");
  ThresholdRoot r;
  while (hi - lo > 1e-15 * hi && r.iterations < 200) {
    const double mid = 0.5 * (lo + hi);
    const double fm = disintegration_threshold_residual(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    ++r.iterations;
  }
  r.ratio = 0.5 * (lo + hi);
  r.residual = std::abs(disintegration_threshold_residual(r.ratio));
  return r;
}

ThresholdRoot disintegration_threshold_newton(double guess) {
  ThresholdRoot r;
  double x = guess;
  for (; r.iterations < 100; ++r.iterations) {
    const double f = disintegration_threshold_residual(x);
    const double h = 1e-6 * std::max(1.0, std::abs(x));
    const double df =
        (disintegration_threshold_residual(x + h) - disintegration_threshold_residual(x - h)) / (2.0 * h);
    if (!(std::abs(df) > 0.0)) throw NumericError("threshold Newton iteration hit a flat point");
    const double step = f / df;
    x -= step;
    if (!(x > 0.0)) throw NumericError("threshold Newton iteration left the domain");
    if (std::abs(step) < 1e-15 * std::abs(x)) break;
  }
  r.ratio = x;
  r.residual = std::abs(disintegration_threshold_residual(x));
  if (!(r.residual < 1e-10)) throw NumericError("threshold Newton iteration did not converge");
  return r;
}

ThresholdRoot disintegration_threshold() {
  const ThresholdRoot b = disintegration_threshold_bisection();
  ThresholdRoot n = disintegration_threshold_newton(b.ratio);
  if (std::abs(n.ratio - b.ratio) > 1e-8)
    throw NumericError("threshold root finders disagree");
  n.iterations += b.iterations;
  return n;
}

double fb_leakage_rate_low(double rate, double j_prop) {
  require_nonnegative(rate, "rate");
  require_nonnegative(j_prop, "J_prop");
  const double den = 4.0 * j_prop * j_prop + rate * rate;
  return den > 0.0 ? 2.0 * j_prop * j_prop * rate / den : 0.0;
}

double fb_leakage_rate_high(double rate, double hopping, double anharmonicity) {
  require_nonnegative(rate, "rate");
  require_nonnegative(hopping, "hopping");
  const double den = rate * rate + anharmonicity * anharmonicity;
  return den > 0.0 ? 4.0 * hopping * hopping * rate / den : 0.0;
}

QubitTimes fb_qubit_times(double rate, double hopping, double detuning) {
  require_nonnegative(rate, "rate");
  QubitTimes q;
  if (rate == 0.0 || hopping == 0.0) {
    q.t1 = q.t2 = std::numeric_limits<double>::infinity();
    q.bounded = false;
    return q;
  }
  q.t1 = (rate * rate + detuning * detuning) / (2.0 * hopping * hopping * rate);
  q.t2 = 2.0 * q.t1;
  return q;
}

double diss_norm_exact_L2(double rate, double j_prop, double t) {
  require_nonnegative(rate, "rate");
  require_nonnegative(j_prop, "J_prop");
  if (t < 0.0) throw ConfigError("time must be >= 0");
  if (t == 0.0) return 1.0;
  if (j_prop == 0.0) return 1.0;  // the stack never leaves site 1
  const double ep = 2.0 * j_prop;
  if (std::abs(rate - ep) <= 1e-6 * ep) {
    const double y = j_prop * t;
    return std::exp(-2.0 * y) * (1.0 + 2.0 * y + 2.0 * y * y);
  }
  const double x = rate / j_prop;
  const double damp = std::exp(-rate * t);
  if (rate < ep) {
    const double s = std::sqrt(ep * ep - rate * rate);
    return damp / (4.0 - x * x) *
           (4.0 - x * x * std::cos(s * t) + 2.0 * x * std::sqrt(1.0 - 0.25 * x * x) * std::sin(s * t));
  }
  const double s = std::sqrt(rate * rate - ep * ep);
  // e^{-Gamma t} cosh(s t) overflows separately; combine the exponents first
  const double ep_plus = std::exp((s - rate) * t);
  const double ep_minus = std::exp(-(s + rate) * t);
  const double ch = 0.5 * (ep_plus + ep_minus);
  const double sh = 0.5 * (ep_plus - ep_minus);
  return (-4.0 * damp + x * x * ch + 2.0 * x * std::sqrt(0.25 * x * x - 1.0) * sh) / (x * x - 4.0);
}

double diss_rate_low(double rate, double j_prop) {
  require_nonnegative(rate, "rate");
  require_nonnegative(j_prop, "J_prop");
  const double den = 2.0 * j_prop * j_prop + rate * rate;
  return den > 0.0 ? 2.0 * j_prop * j_prop * rate / den : 0.0;
}

double diss_rate_high(double rate, double hopping, double anharmonicity) {
  require_nonnegative(rate, "rate");
  require_nonnegative(hopping, "hopping");
  const double den = 4.0 * anharmonicity * anharmonicity + rate * rate;
  return den > 0.0 ? 8.0 * hopping * hopping * rate / den : 0.0;
}

std::vector<ExponentialTerm> diss_general_L_terms(int length, double rate, double j_prop,
                                                  RateRegime regime, bool borders) {
  require_nonnegative(rate, "rate");
  require_nonnegative(j_prop, "J_prop");
  if (length < 2) throw ConfigError("general-L norm needs L >= 2");
  std::vector<ExponentialTerm> terms;
  const double slow = rate > 0.0 ? 2.0 * j_prop * j_prop / rate : 0.0;
  auto sin2 = [](double x) { return std::sin(x) * std::sin(x); };
  if (borders) {
    if (length == 2) {
      terms.push_back({1.0, regime == RateRegime::low ? rate : slow});
      return terms;
    }
    if (length != 3) throw ConfigError("edge-localized norms are available for L = 2 and L = 3 only");
    if (regime == RateRegime::low) {
      terms = {{0.5, rate}, {1.0 / 6.0, rate / 3.0}, {1.0 / 3.0, 2.0 * rate / 3.0}};
    } else {
      const double a = -0.5 * (1.0 - std::sqrt(5.0));
      const double b = -0.5 * (1.0 + std::sqrt(5.0));
      terms = {{a * a / (1.0 + a * a), slow / (1.0 + a * a)},
               {b * b / (1.0 + b * b), slow / (1.0 + b * b)}};
    }
    return terms;
  }
  const int L = length;
  if (regime == RateRegime::low) {
    for (int l = 1; l <= L; ++l) {
      double norm = 0.0;
      for (int k = 1; k <= L; ++k) norm += sin2(k * l * kPi / (L + 1));
      terms.push_back({sin2(l * kPi / (L + 1)) / norm,
                       4.0 / (L + 1) * sin2(l * L * kPi / (L + 1)) * rate});
    }
  } else {
    for (int l = 1; l <= L - 1; ++l) {
      double norm = 0.0;
      for (int k = 1; k <= L - 1; ++k) norm += sin2(k * l * kPi / L);
      terms.push_back({sin2(l * kPi / L) / norm, slow * sin2((L - 1) * l * kPi / L) / norm});
    }
  }
  return terms;
}

double diss_norm_general_L(int length, double rate, double j_prop, double t, RateRegime regime,
                           bool borders) {
  if (t < 0.0) throw ConfigError("time must be >= 0");
  double n = 0.0;
  for (const auto& term : diss_general_L_terms(length, rate, j_prop, regime, borders))
    n += term.weight * std::exp(-term.rate * t);
  return n;
}

QubitTimes diss_qubit_times(double rate, double hopping, double detuning_first_last, int length,
                            std::span<const double> intermediate_detunings) {
  require_nonnegative(rate, "rate");
  if (length < 2) throw ConfigError("qubit times need L >= 2");
  if (intermediate_detunings.size() != static_cast<std::size_t>(length - 2))
    throw ConfigError("expected L - 2 intermediate detunings");
  double f = 1.0;
  for (double d : intermediate_detunings) {
    if (d == 0.0)
      throw NumericError("zero intermediate detuning: degenerate perturbation regime");
    f *= hopping * hopping / (d * d);
  }
  QubitTimes q;
  if (rate == 0.0 || hopping == 0.0) {
    q.t1 = q.t2 = std::numeric_limits<double>::infinity();
    q.bounded = false;
    return q;
  }
  q.t1 = (4.0 * detuning_first_last * detuning_first_last + rate * rate) /
         (4.0 * f * hopping * hopping * rate);
  q.t2 = 2.0 * q.t1;
  return q;
}

LiouvillianGap liouvillian_qubit_gap(double delta, double beta, double rate) {
  require_nonnegative(rate, "rate");
  LiouvillianGap g;
  if (delta == 0.0) {
    g.exact = true;
    const std::complex<double> root = std::sqrt(std::complex<double>(rate * rate - 16.0 * beta * beta, 0.0));
    g.value = 0.5 * (-rate + root);
    if (std::abs(g.value) == 0.0) g.value = -rate;
    return g;
  }
  const double d = std::abs(delta);
  const double gb = rate / d;
  const double bb = beta / d;
  g.outside_validity = std::abs(bb) > 0.35;
  const double e_minus = -4.0 * gb * bb * bb / (gb * gb + 4.0) * d;
  const double e_pair = -gb * (1.0 - 2.0 * bb * bb / (gb * gb + 4.0)) * d;
  g.value = std::abs(e_minus) <= std::abs(e_pair) ? e_minus : e_pair;
  return g;
}

}  // namespace lru::analytics
