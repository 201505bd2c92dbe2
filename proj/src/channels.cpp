#include "lru/channels.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "lru/error.hpp"

namespace lru {

const char* to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::none: return "none";
    case ChannelKind::periodic_feedback: return "periodic_feedback";
    case ChannelKind::random_feedback: return "random_feedback";
    case ChannelKind::dissipation: return "dissipation";
  }
  return "none";
}

ChannelKind channel_kind_from_string(const std::string& name) {
  if (name == "none") return ChannelKind::none;
  if (name == "periodic_feedback" || name == "periodic") return ChannelKind::periodic_feedback;
  if (name == "random_feedback" || name == "random") return ChannelKind::random_feedback;
  if (name == "dissipation") return ChannelKind::dissipation;
  throw ConfigError("unknown channel kind '" + name + "'");
}

void ResetChannel::validate(int length) const {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw ConfigError("channel rate must be finite and >= 0");
  const int s = resolved_site(length);
  if (s < 1 || s > length) throw ConfigError("channel site outside the array");
}

void NoiseModel::validate() const {
  if (!(relaxation_rate >= 0.0)) throw ConfigError("relaxation rate must be >= 0");
  if (!(dephasing_rate >= 0.0)) throw ConfigError("dephasing rate must be >= 0");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (!(kelvin_per_frequency_unit > 0.0)) throw ConfigError("kelvin_per_frequency_unit must be > 0");
}

FeedbackSchedule::FeedbackSchedule(const ResetChannel& channel, double t_max, double dt, Rng& rng)
    : rng_(&rng), t_max_(t_max), rate_(channel.rate), dt_(dt) {
  if (!channel.is_feedback()) throw ConfigError("measurement times need a feedback channel");
  if (rate_ == 0.0 || t_max < 0.0) {
    done_ = true;
    return;
  }
  if (channel.kind == ChannelKind::periodic_feedback) {
    periodic_ = true;
    period_ = 1.0 / rate_;
    t0_ = uniform01(rng) * period_;
  } else if (dt <= 0.0) {
    continuous_ = true;
  } else {
    steps_ = static_cast<long long>(std::floor(t_max / dt * (1.0 + 1e-12)));
    const double p = rate_ * dt;
    log_q_ = p >= 1.0 ? 0.0 : std::log1p(-p);
  }
}

double FeedbackSchedule::next() {
  constexpr double kNever = std::numeric_limits<double>::infinity();
  if (done_) return kNever;
  double t = kNever;
  if (periodic_) {
    t = t0_ + static_cast<double>(k_++) * period_;
  } else if (continuous_) {
    t_last_ += exponential(*rng_, rate_);
    t = t_last_;
  } else {
    // Bernoulli trials on steps 1..steps_; a geometric skip jumps to the next success
    long long skip = 0;
    if (log_q_ != 0.0) {
      const double s = std::floor(std::log(uniform01_open_low(*rng_)) / log_q_);
      skip = s >= static_cast<double>(steps_ - k_) ? steps_ - k_ : static_cast<long long>(s);
    }
    k_ += skip + 1;
    if (k_ <= steps_) t = static_cast<double>(k_) * dt_;
  }
  if (!(t <= t_max_)) {
    done_ = true;
    return kNever;
  }
  return t;
}

std::vector<double> measurement_times(const ResetChannel& channel, double t_max, double dt, Rng& rng) {
  FeedbackSchedule schedule(channel, t_max, dt, rng);
  std::vector<double> times;
  for (double t = schedule.next(); std::isfinite(t); t = schedule.next()) times.push_back(t);
  return times;
}

FeedbackMeasurement::FeedbackMeasurement(int length, int local_dim, int site) : local_dim_(local_dim) {
  if (site < 1 || site > length) throw ConfigError("measured site outside the array");
  stride_ = 1;
  for (int k = site; k < length; ++k) stride_ *= static_cast<std::size_t>(local_dim);
  std::size_t dim = stride_;
  for (int k = 1; k <= site; ++k) dim *= static_cast<std::size_t>(local_dim);
  occupation_.resize(dim);
  for (std::size_t i = 0; i < dim; ++i)
    occupation_[i] = static_cast<unsigned char>(site_occupation(i, site, length, local_dim));
}

std::vector<double> FeedbackMeasurement::probabilities(const StateVector& psi) const {
  std::vector<double> p(local_dim_, 0.0);
  for (std::size_t i = 0; i < occupation_.size(); ++i) p[occupation_[i]] += std::norm(psi(i));
  double total = 0.0;
  for (double x : p) total += x;
  if (!(total > 0.0)) throw NumericError("measurement on a zero state");
  for (double& x : p) x /= total;
  return p;
}

int FeedbackMeasurement::apply(StateVector& psi, Rng& rng) const {
  if (static_cast<std::size_t>(psi.size()) != occupation_.size())
    throw ConfigError("state dimension does not match measurement");
  const std::vector<double> p = probabilities(psi);
  double support = 0.0;
  for (double x : p)
    if (x >= 1e-15) support += x;
  const double u = uniform01(rng) * support;
  int outcome = -1;
  double acc = 0.0;
  for (int n = 0; n < local_dim_; ++n) {
    if (p[n] < 1e-15) continue;
    acc += p[n];
    outcome = n;
    if (u < acc) break;
  }
  const std::size_t shift = static_cast<std::size_t>(outcome) * stride_;
  for (std::size_t i = 0; i < occupation_.size(); ++i)
    if (occupation_[i] != outcome) psi(i) = 0.0;
  if (shift != 0) {
    for (std::size_t i = 0; i < occupation_.size(); ++i) {
      if (occupation_[i] != outcome) continue;
      psi(i - shift) = psi(i);
      psi(i) = 0.0;
    }
  }
  normalize(psi);
  return outcome;
}

MeasurementOutcome apply_feedback_measurement(const StateVector& psi, const LatticeSpec& spec,
                                              int site, Rng& rng) {
  FeedbackMeasurement m(spec.length, spec.local_dim, site);
  MeasurementOutcome out{psi, 0};
  out.outcome = m.apply(out.state, rng);
  return out;
}

std::vector<OperatorMatrix> noise_jump_operators(const NoiseModel& model, const LatticeSpec& spec) {
  model.validate();
  std::vector<OperatorMatrix> ops;
  for (int l = 1; l <= spec.length; ++l) {
    if (model.relaxation_rate > 0.0) {
      const auto a = build_site_operator(spec, l, SiteOperatorKind::annihilation);
      ops.emplace_back(SparseMatrix(std::sqrt(model.relaxation_rate) * a.sparse()), a.basis(), false);
    }
  }
  for (int l = 1; l <= spec.length; ++l) {
    if (model.dephasing_rate > 0.0) {
      const auto n = build_site_operator(spec, l, SiteOperatorKind::number);
      ops.emplace_back(SparseMatrix(std::sqrt(2.0 * model.dephasing_rate) * n.sparse()), n.basis(), true);
    }
  }
  return ops;
}

OperatorMatrix dissipation_jump_operator(const LatticeSpec& spec, int site, double rate) {
  if (!(rate >= 0.0)) throw ConfigError("dissipation rate must be >= 0");
  const auto a = build_site_operator(spec, site, SiteOperatorKind::annihilation);
  return OperatorMatrix(SparseMatrix(std::sqrt(rate) * a.sparse()), a.basis(), false);
}

OperatorMatrix add_jump_damping(const OperatorMatrix& h, const std::vector<OperatorMatrix>& jumps) {
  if (jumps.empty()) return h;
  SparseMatrix out = h.sparse();
  for (const auto& l : jumps) {
    SparseMatrix ldl = SparseMatrix(l.sparse().adjoint()) * l.sparse();
    out += Complex(0.0, -0.5) * ldl;
  }
  return OperatorMatrix(std::move(out), h.basis(), false);
}

int dissipation_jump_step(StateVector& psi, const std::vector<OperatorMatrix>& jumps, double dt,
                          const std::function<void(StateVector&)>& no_jump, Rng& rng) {
  std::vector<double> dp(jumps.size());
  double total = 0.0;
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    dp[k] = dt * (jumps[k].sparse() * psi).squaredNorm();
    total += dp[k];
  }
  if (total >= 1.0) throw NumericError("jump probability per step reached 1; reduce dt");
  const double u = uniform01(rng);
  if (u < total) {
    double acc = 0.0;
    for (std::size_t k = 0; k < jumps.size(); ++k) {
      acc += dp[k];
      if (u < acc || k + 1 == jumps.size()) {
        psi = jumps[k].sparse() * psi;
        normalize(psi);
        return static_cast<int>(k);
      }
    }
  }
  no_jump(psi);
  normalize(psi);
  return -1;
}

std::array<double, 3> thermal_weights(double omega, double anharmonicity, const NoiseModel& model) {
  if (model.temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (model.temperature == 0.0) return {1.0, 0.0, 0.0};
  const double beta = model.kelvin_per_frequency_unit / model.temperature;
  const std::array<double, 3> energy = {0.0, omega, 2.0 * omega - anharmonicity};
  std::array<double, 3> w{};
  double z = 0.0;
  for (int n = 0; n < 3; ++n) {
    w[n] = std::exp(-beta * energy[n]);
    z += w[n];
  }
  for (double& x : w) x /= z;
  return w;
}

const char* to_string(CodingState s) {
  switch (s) {
    case CodingState::ket0: return "ket0";
    case CodingState::ket1: return "ket1";
    case CodingState::ket2: return "ket2";
    case CodingState::plus: return "plus";
  }
  return "ket0";
}

CodingState coding_state_from_string(const std::string& name) {
  if (name == "ket0" || name == "0") return CodingState::ket0;
  if (name == "ket1" || name == "1") return CodingState::ket1;
  if (name == "ket2" || name == "2") return CodingState::ket2;
  if (name == "plus" || name == "+") return CodingState::plus;
  throw ConfigError("unknown coding state '" + name + "'");
}

Vector coding_vector(CodingState s, int local_dim) {
  Vector v = Vector::Zero(local_dim);
  switch (s) {
    case CodingState::ket0: v(0) = 1.0; break;
    case CodingState::ket1: v(1) = 1.0; break;
    case CodingState::ket2: v(2) = 1.0; break;
    case CodingState::plus: v(0) = v(1) = 1.0 / std::sqrt(2.0); break;
  }
  return v;
}

StateVector sample_thermal_initial(const DisorderRealization& real, const NoiseModel& model,
                                   const Vector& coding_state, Rng& rng) {
  if (model.temperature < 0.0) throw ConfigError("temperature must be >= 0");
  const LatticeSpec& spec = real.parent;
  if (coding_state.size() != spec.local_dim) throw ConfigError("coding state has wrong dimension");
  std::size_t rest = 0;  // index of sites 2..L
  for (int l = 2; l <= spec.length; ++l) {
    int n = 0;
    if (model.temperature > 0.0) {
      const auto w = thermal_weights(real.omegas[l - 1], real.anharmonicities[l - 1], model);
      const double u = uniform01(rng);
      n = u < w[0] ? 0 : (u < w[0] + w[1] ? 1 : 2);
    }
    rest = rest * spec.local_dim + static_cast<std::size_t>(n);
  }
  std::size_t block = 1;
  for (int l = 2; l <= spec.length; ++l) block *= static_cast<std::size_t>(spec.local_dim);
  StateVector psi = StateVector::Zero(spec.dimension());
  for (int n = 0; n < spec.local_dim; ++n) psi(n * block + rest) = coding_state(n);
  return psi;
}

}  // namespace lru
