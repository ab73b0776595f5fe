#include "model.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "errors.hpp"
#include "log.hpp"

namespace arwpcn {

namespace {
std::atomic<bool> g_warnings{true};
}

void set_warnings_enabled(bool enabled) { g_warnings.store(enabled); }

void warn(std::string_view message) {
  if (g_warnings.load()) std::cerr << "warning: " << message << '\n';
}

namespace model {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double db_to_linear_power(double db) { return std::pow(10.0, db / 10.0); }
double db_to_linear_amplitude(double db) { return std::pow(10.0, db / 20.0); }

void SystemParams::validate() const {
  auto fail = [](const std::string& what) { throw DomainError("invalid SystemParams: " + what); };
  if (M < 1 || L < 1 || N < 1 || K < 1) fail("M, L, N, K must be >= 1");
  if (!(p0 >= 0.0)) fail("p0 must be >= 0");
  if (!(pr >= 0.0)) fail("pr must be >= 0");
  if (!(sigma_v2 >= 0.0)) fail("sigma_v2 must be >= 0");
  if (!(sigma_r2 > 0.0)) fail("sigma_r2 must be > 0");
  if (!(beta > 0.0 && beta <= 1.0)) fail("beta must lie in (0, 1]");
  if (!(a_max > 0.0)) fail("a_max must be > 0");
  if (!(alpha_ris > 0.0 && alpha_direct > 0.0)) fail("path-loss exponents must be > 0");
  if (!(rician_k >= 0.0)) fail("rician_k must be >= 0");
  if (!(pathloss_ref > 0.0)) fail("pathloss_ref must be > 0");
  if (!(geometry.user_radius >= 0.0)) fail("user_radius must be >= 0");
}

double wrap_phase(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta, two_pi);
  if (t < 0.0) t += two_pi;
  if (t >= two_pi) t = 0.0;
  return t;
}

RisProfile RisProfile::zeros(int n) {
  return RisProfile{VectorXd::Zero(n), VectorXd::Zero(n)};
}

RisProfile RisProfile::from_coefficients(const VectorXcd& phi) {
  RisProfile out{VectorXd(phi.size()), VectorXd(phi.size())};
  for (Eigen::Index n = 0; n < phi.size(); ++n) {
    out.amp[n] = std::abs(phi[n]);
    out.phase[n] = out.amp[n] > 0.0 ? wrap_phase(std::arg(phi[n])) : 0.0;
  }
  return out;
}

VectorXcd RisProfile::coefficients() const {
  VectorXcd phi(amp.size());
  for (Eigen::Index n = 0; n < amp.size(); ++n) phi[n] = std::polar(amp[n], phase[n]);
  return phi;
}

VectorXd Allocation::powers() const {
  VectorXd p = VectorXd::Zero(tau.size());
  for (Eigen::Index k = 0; k < tau.size(); ++k)
    if (tau[k] > kTauMin) p[k] = e[k] / tau[k];
  return p;
}

double path_loss(double d, double alpha, const SystemParams& params) {
  if (!(d > 0.0)) throw DomainError("path_loss: distance must be positive");
  return params.pathloss_ref * std::pow(d, -alpha);
}

namespace {

double distance(Point a, Point b) { return std::hypot(b.x - a.x, b.y - a.y); }
double direction(Point from, Point to) { return std::atan2(to.y - from.y, to.x - from.x); }

/// Half-wavelength ULA laid along the x axis.
VectorXcd steering(int n, double angle) {
  VectorXcd a(n);
  const double c = std::cos(angle);
  for (int i = 0; i < n; ++i) a[i] = std::polar(1.0, -std::numbers::pi * i * c);
  return a;
}

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return uni_(rng_); }

  cd complex_normal() {
    const double re = norm_(rng_);
    const double im = norm_(rng_);
    return cd(re, im) * (1.0 / std::numbers::sqrt2);
  }

  MatrixXcd rayleigh(int rows, int cols) {
    MatrixXcd m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = complex_normal();
    return m;
  }

  MatrixXcd rician(const MatrixXcd& los, double k_factor) {
    const double los_w = std::sqrt(k_factor / (k_factor + 1.0));
    const double nlos_w = std::sqrt(1.0 / (k_factor + 1.0));
    return los_w * los + nlos_w * rayleigh(static_cast<int>(los.rows()), static_cast<int>(los.cols()));
  }

 private:
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> uni_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace

ChannelSet generate_channels(const SystemParams& params, std::uint64_t seed) {
  params.validate();
  const auto& g = params.geometry;
  const Point ps{0.0, 0.0};
  const Point ris{g.x_r, 0.0};
  const Point rs{g.x_s, 0.0};

  Sampler s(seed);
  ChannelSet ch;
  ch.users.resize(params.K);
  for (auto& u : ch.users) {
    const double r = g.user_radius * std::sqrt(s.uniform());
    const double t = 2.0 * std::numbers::pi * s.uniform();
    u = Point{g.x_u + r * std::cos(t), g.x_h + r * std::sin(t)};
  }

  const double kf = params.rician_k;
  {
    const MatrixXcd los = steering(params.N, direction(ris, ps)) *
                          steering(params.M, direction(ps, ris)).adjoint();
    ch.H_r = std::sqrt(path_loss(distance(ps, ris), params.alpha_ris, params)) * s.rician(los, kf);
  }
  {
    const MatrixXcd los = steering(params.L, direction(rs, ris)) *
                          steering(params.N, direction(ris, rs)).adjoint();
    ch.G_r = std::sqrt(path_loss(distance(ris, rs), params.alpha_ris, params)) * s.rician(los, kf);
  }

  for (const Point& u : ch.users) {
    const double pl_ris = std::sqrt(path_loss(distance(ris, u), params.alpha_ris, params));
    const VectorXcd a_ris = steering(params.N, direction(ris, u));
    ch.h_u.push_back(pl_ris * s.rician(a_ris, kf).col(0));
    ch.g_u.push_back(pl_ris * s.rician(a_ris, kf).col(0));
    ch.h_d.push_back(std::sqrt(path_loss(distance(ps, u), params.alpha_direct, params)) *
                     s.rayleigh(params.M, 1).col(0));
    ch.g_d.push_back(std::sqrt(path_loss(distance(rs, u), params.alpha_direct, params)) *
                     s.rayleigh(params.L, 1).col(0));
  }
  return ch;
}

namespace {
void check_user(const ChannelSet& ch, int k) {
  if (k < 0 || k >= ch.num_users()) throw DomainError("user index out of range");
}
void check_profile(const ChannelSet& ch, const RisProfile& phi) {
  if (phi.size() != ch.num_elements()) throw DomainError("RIS profile size does not match N");
}
}  // namespace

VectorXcd effective_downlink_channel(const ChannelSet& ch, const RisProfile& phi0, int k) {
  check_user(ch, k);
  check_profile(ch, phi0);
  // h_k^H = h_u^H Phi0 H_r + h_d^H  =>  h_k = H_r^H conj(Phi0) h_u + h_d
  const VectorXcd phi = phi0.coefficients();
  return ch.H_r.adjoint() * phi.conjugate().cwiseProduct(ch.h_u[k]) + ch.h_d[k];
}

VectorXcd effective_uplink_channel(const ChannelSet& ch, const RisProfile& phik, int k) {
  check_user(ch, k);
  check_profile(ch, phik);
  return ch.g_d[k] + ch.G_r * phik.coefficients().cwiseProduct(ch.g_u[k]);
}

double harvested_energy(const ChannelSet& ch, const VectorXcd& w0, const RisProfile& phi0,
                        double tau0, int k, const SystemParams& params) {
  if (w0.squaredNorm() > params.p0 * (1.0 + 1e-9) + 1e-300)
    warn("harvested_energy: transmit beamformer exceeds the PS power budget");
  const VectorXcd hk = effective_downlink_channel(ch, phi0, k);
  const double beam = std::norm(hk.dot(w0));  // |h_k^H w0|^2
  const double noise = phi0.amp.cwiseAbs2().dot(ch.h_u[k].cwiseAbs2()) * params.sigma_v2;
  return params.beta * (beam + noise) * tau0;
}

double wet_amplification_power(const ChannelSet& ch, const RisProfile& phi0,
                               const SystemParams& params) {
  check_profile(ch, phi0);
  const VectorXd a2 = phi0.amp.cwiseAbs2();
  const VectorXd row_gain = ch.H_r.rowwise().squaredNorm();
  return params.p0 * a2.dot(row_gain) + params.sigma_v2 * a2.sum();
}

double wit_amplification_power(const ChannelSet& ch, const RisProfile& phik, double p_k, int k,
                               const SystemParams& params) {
  check_user(ch, k);
  check_profile(ch, phik);
  const VectorXd a2 = phik.amp.cwiseAbs2();
  return p_k * a2.dot(ch.g_u[k].cwiseAbs2()) + params.sigma_v2 * a2.sum();
}

double uplink_snr(const ChannelSet& ch, const RisProfile& phik, const VectorXcd& w_k, double p_k,
                  int k, const SystemParams& params) {
  if (w_k.squaredNorm() == 0.0) throw DomainError("uplink_snr: zero receive beamformer");
  if (p_k < 0.0) throw DomainError("uplink_snr: negative transmit power");
  const VectorXcd gk = effective_uplink_channel(ch, phik, k);
  const double signal = p_k * std::norm(w_k.dot(gk));
  // w^H G_r Phi_k as a row: entries conj(G_r^H w)_n * phi_n
  const VectorXcd ris_row = (ch.G_r.adjoint() * w_k).conjugate().cwiseProduct(phik.coefficients());
  const double noise = ris_row.squaredNorm() * params.sigma_v2 + w_k.squaredNorm() * params.sigma_r2;
  return signal / noise;
}

double user_rate(double tau_k, double gamma_k) {
  if (tau_k <= 0.0) return 0.0;
  return tau_k * std::log2(1.0 + gamma_k);
}

}  // namespace model
}  // namespace arwpcn
