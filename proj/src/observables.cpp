#include "lru/observables.hpp"

#include <cmath>
#include <string>

#include "lru/error.hpp"

namespace lru {

namespace {

std::size_t site1_block(const LatticeSpec& spec) {
  std::size_t b = 1;
  for (int l = 2; l <= spec.length; ++l) b *= static_cast<std::size_t>(spec.local_dim);
  return b;
}

void check_dims(Eigen::Index n, std::size_t dim) {
  if (static_cast<std::size_t>(n) != dim) throw ConfigError("state dimension does not match lattice");
}

}  // namespace

ObservableEvaluator::ObservableEvaluator(const LatticeSpec& spec)
    : dim_(spec.dimension()), block_(site1_block(spec)) {
  leak_total_.resize(dim_);
  leak_site1_.resize(dim_);
  n_site1_.resize(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    double total = 0.0;
    for (int l = 1; l <= spec.length; ++l) {
      const int n = site_occupation(i, l, spec.length, spec.local_dim);
      total += 0.5 * n * (n - 1);
    }
    const int n1 = site_occupation(i, 1, spec.length, spec.local_dim);
    leak_total_[i] = total;
    leak_site1_[i] = 0.5 * n1 * (n1 - 1);
    n_site1_[i] = n1;
  }
}

ObservableSample ObservableEvaluator::evaluate(const StateVector& psi) const {
  check_dims(psi.size(), dim_);
  ObservableSample s;
  double norm = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double p = std::norm(psi(i));
    norm += p;
    s.leakage_total += p * leak_total_[i];
    s.leakage_site1 += p * leak_site1_[i];
    s.occupation_site1 += p * n_site1_[i];
  }
  for (std::size_t r = 0; r < block_; ++r) s.coherence_site1 += psi(r) * std::conj(psi(block_ + r));
  if (!(norm > 0.0)) throw NumericError("observable of a zero state");
  s.leakage_total /= norm;
  s.leakage_site1 /= norm;
  s.occupation_site1 /= norm;
  s.coherence_site1 /= norm;
  return s;
}

ObservableSample ObservableEvaluator::evaluate(const DenseMatrix& rho) const {
  check_dims(rho.rows(), dim_);
  ObservableSample s;
  double tr = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    const double p = rho(i, i).real();
    tr += p;
    s.leakage_total += p * leak_total_[i];
    s.leakage_site1 += p * leak_site1_[i];
    s.occupation_site1 += p * n_site1_[i];
  }
  for (std::size_t r = 0; r < block_; ++r) s.coherence_site1 += rho(r, block_ + r);
  if (!(tr > 0.0)) throw NumericError("observable of a zero density matrix");
  s.leakage_total /= tr;
  s.leakage_site1 /= tr;
  s.occupation_site1 /= tr;
  s.coherence_site1 /= tr;
  return s;
}

double leakage_population(const StateVector& psi, const LatticeSpec& spec, SiteSelection sites) {
  const auto s = ObservableEvaluator(spec).evaluate(psi);
  return sites == SiteSelection::all ? s.leakage_total : s.leakage_site1;
}

double leakage_population(const DenseMatrix& rho, const LatticeSpec& spec, SiteSelection sites) {
  const auto s = ObservableEvaluator(spec).evaluate(rho);
  return sites == SiteSelection::all ? s.leakage_total : s.leakage_site1;
}

double occupation(const StateVector& psi, const LatticeSpec& spec, int site) {
  const auto n = build_site_operator(spec, site, SiteOperatorKind::number);
  check_dims(psi.size(), n.dimension());
  return psi.dot(n.sparse() * psi).real() / psi.squaredNorm();
}

double occupation(const DenseMatrix& rho, const LatticeSpec& spec, int site) {
  const auto n = build_site_operator(spec, site, SiteOperatorKind::number);
  check_dims(rho.rows(), n.dimension());
  return (n.sparse() * rho).trace().real() / rho.trace().real();
}

Complex site1_coherence(const StateVector& psi, const LatticeSpec& spec) {
  return ObservableEvaluator(spec).evaluate(psi).coherence_site1;
}

Complex site1_coherence(const DenseMatrix& rho, const LatticeSpec& spec) {
  return ObservableEvaluator(spec).evaluate(rho).coherence_site1;
}

std::vector<double> coherence_envelope(std::span<const Complex> coherence) {
  std::vector<double> out;
  out.reserve(coherence.size());
  for (const Complex& c : coherence) out.push_back(2.0 * std::abs(c));
  return out;
}

namespace {

void finish_fit(FitResult& fit, const std::vector<double>& t, const std::vector<double>& y) {
  const double k = 1.0 / fit.decay_time;
  const double a0 = fit.amplitude * std::exp(-k * t.front());
  double ss = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double s = t[i] - t.front();
    const double e = std::exp(-k * s);
    const double r = y[i] - a0 * e;
    ss += r * r;
    h00 += e * e;
    h01 -= a0 * s * e * e;
    h11 += a0 * a0 * s * s * e * e;
  }
  const double n = static_cast<double>(t.size());
  fit.rms_residual = std::sqrt(ss / n);
  const double det = h00 * h11 - h01 * h01;
  fit.decay_time_se = det > 0.0 ? std::sqrt(ss / (n - 2.0) * h00 / det) / (k * k)
                                : std::numeric_limits<double>::infinity();
}

// Linear regression of ln y on t; returns (ln A, -1/tau).
bool log_linear(const std::vector<double>& t, const std::vector<double>& y, double& intercept,
                double& slope) {
  const double n = static_cast<double>(t.size());
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    my += std::log(y[i]);
  }
  mt /= n;
  my /= n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sty += (t[i] - mt) * (std::log(y[i]) - my);
  }
  if (!(stt > 0.0)) return false;
  slope = sty / stt;
  intercept = my - slope * mt;
  return std::isfinite(slope) && std::isfinite(intercept);
}

}  // namespace

FitResult fit_exponential(std::span<const double> t, std::span<const double> y, double t_start,
                          double t_end) {
  if (t.size() != y.size()) throw ConfigError("fit needs equally long time and value series");
  FitResult fit;
  fit.t_start = t_start;
  fit.t_end = t_end;
  std::vector<double> tw, yw;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_start || t[i] > t_end) continue;
    tw.push_back(t[i]);
    yw.push_back(y[i]);
  }
  fit.points = static_cast<int>(tw.size());
  if (!tw.empty()) {
    fit.t_start = tw.front();
    fit.t_end = tw.back();
  }
  if (tw.size() < 10) return fit;
  bool positive = true;
  for (double v : yw) {
    if (!std::isfinite(v)) return fit;
    positive = positive && v > 1e-6;
  }

  // Shift times to the window start for conditioning; A refers to t = 0 afterwards.
  const double t0 = tw.front();
  std::vector<double> ts(tw.size());
  for (std::size_t i = 0; i < tw.size(); ++i) ts[i] = tw[i] - t0;

  double ln_a = 0.0, slope = 0.0;
  if (positive) {
    if (!log_linear(ts, yw, ln_a, slope) || !(slope < 0.0)) {
      fit.decay_time = slope < 0.0 ? -1.0 / slope : 0.0;
      return fit;
    }
  } else {
    // Start from the positive part, then damped Gauss-Newton in (A, k).
    std::vector<double> tp, yp;
    for (std::size_t i = 0; i < ts.size(); ++i)
      if (yw[i] > 0.0) {
        tp.push_back(ts[i]);
        yp.push_back(yw[i]);
      }
    double a = yw.front() > 0.0 ? yw.front() : 1.0;
    double k = 1.0 / std::max(ts.back(), 1e-300);
    if (tp.size() >= 2 && log_linear(tp, yp, ln_a, slope) && slope < 0.0) {
      a = std::exp(ln_a);
      k = -slope;
    }
    auto cost = [&](double aa, double kk) {
      double s = 0.0;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        const double r = yw[i] - aa * std::exp(-kk * ts[i]);
        s += r * r;
      }
      return s;
    };
    double lambda = 1e-3;
    double c = cost(a, k);
    bool ok = false;
    for (int iter = 0; iter < 200; ++iter) {
      double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        const double e = std::exp(-k * ts[i]);
        const double r = yw[i] - a * e;
        const double da = e;
        const double dk = -a * ts[i] * e;
        g0 += da * r;
        g1 += dk * r;
        h00 += da * da;
        h01 += da * dk;
        h11 += dk * dk;
      }
      bool improved = false;
      for (int tries = 0; tries < 30 && !improved; ++tries) {
        const double m00 = h00 * (1.0 + lambda), m11 = h11 * (1.0 + lambda);
        const double det = m00 * m11 - h01 * h01;
        if (!(std::abs(det) > 0.0)) break;
        const double sa = (m11 * g0 - h01 * g1) / det;
        const double sk = (m00 * g1 - h01 * g0) / det;
        const double c_new = cost(a + sa, k + sk);
        if (std::isfinite(c_new) && c_new <= c) {
          const bool tiny = std::abs(sa) <= 1e-12 * std::abs(a) && std::abs(sk) <= 1e-12 * std::abs(k);
          a += sa;
          k += sk;
          ok = ok || tiny || (c - c_new) <= 1e-14 * c;
          c = c_new;
          lambda = std::max(lambda * 0.3, 1e-12);
          improved = true;
        } else {
          lambda *= 10.0;
        }
      }
      if (!improved || ok) {
        ok = true;
        break;
      }
    }
    if (!ok || !(k > 0.0) || !std::isfinite(a)) {
      fit.decay_time = k > 0.0 ? 1.0 / k : 0.0;
      return fit;
    }
    if (a <= 0.0) return fit;
    ln_a = std::log(a);
    slope = -k;
  }
  fit.decay_time = -1.0 / slope;
  fit.amplitude = std::exp(ln_a + t0 / fit.decay_time);
  fit.converged = std::isfinite(fit.decay_time) && fit.decay_time > 0.0;
  finish_fit(fit, tw, yw);
  return fit;
}

double propagation_time(double hopping, double anharmonicity) {
  if (!(hopping > 0.0) || !(anharmonicity > 0.0))
    throw ConfigError("propagation time needs J > 0 and U > 0");
  return kPi * anharmonicity / (4.0 * hopping * hopping);
}

int first_local_minimum(std::span<const double> y) {
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (y[i] < y[i - 1] && y[i] <= y[i + 1]) {
      // plateaus: require the value to rise eventually
      std::size_t j = i + 1;
      while (j < y.size() && y[j] == y[i]) ++j;
      if (j < y.size() && y[j] > y[i]) return static_cast<int>(i);
    }
  }
  return -1;
}

int first_prominent_minimum(std::span<const double> y, double prominence) {
  const long n = static_cast<long>(y.size());
  for (long i = 1; i + 1 < n; ++i) {
    if (!(y[i] < y[i - 1] && y[i] <= y[i + 1])) continue;
    double left = y[i], right = y[i];
    for (long j = i - 1; j >= 0 && y[j] >= y[i]; --j) left = std::max(left, y[j]);
    for (long j = i + 1; j < n && y[j] >= y[i]; ++j) right = std::max(right, y[j]);
    if (std::min(left, right) - y[i] >= prominence) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace lru
