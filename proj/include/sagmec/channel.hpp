#pragma once

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include "sagmec/units.hpp"

namespace sagmec {

/// RF parameters for all four link tiers.
template <typename Scalar = double>
struct RfParams {
  Scalar rician_factor = Scalar(3);            // linear
  Scalar rician_factor_sat_cloud = Scalar(10); // linear, LoS-dominant feeder link
  Scalar pathloss_los = Scalar(2);
  Scalar pathloss_nlos = Scalar(2.5);
  Scalar tx_power_user_w = Scalar(0.1);
  Scalar tx_power_uav_w = Scalar(1);
  Scalar tx_power_sat_w = Scalar(1);
  Scalar noise_power_w = Scalar(dbm_to_watts(-100.0));  // sigma_n^2 and sigma_l^2
  Scalar bandwidth_user_uav_hz = Scalar(1e7);
  Scalar bandwidth_uav_sat_hz = Scalar(1e7);
  Scalar bandwidth_isl_hz = Scalar(1e9);
  Scalar bandwidth_sat_cloud_hz = Scalar(1e9);
  Scalar beam_gain = Scalar(db_to_linear(25.0));
  Scalar carrier_freq_sat_hz = Scalar(3e10);
  Scalar wavelength_m = Scalar(0.01);
  Scalar boltzmann = Scalar(1.380649e-23);
  Scalar thermal_noise_k = Scalar(354.81);
  Scalar isl_peak_gain = Scalar(1e4);          // 40 dBi
  Scalar max_doppler_hz = Scalar(7.461e5);     // Ka-band LEO kinematics
  Scalar light_speed_mps = Scalar(299792458.0);

  void validate() const {
    if (!(rician_factor > Scalar(0)) || !(noise_power_w > Scalar(0)) ||
        !(bandwidth_user_uav_hz > Scalar(0)) || !(bandwidth_uav_sat_hz > Scalar(0)) ||
        !(bandwidth_isl_hz > Scalar(0)) || !(bandwidth_sat_cloud_hz > Scalar(0)) ||
        !(tx_power_user_w > Scalar(0)) || !(tx_power_uav_w > Scalar(0)) ||
        !(tx_power_sat_w > Scalar(0)) || !(beam_gain > Scalar(0)) ||
        !(thermal_noise_k > Scalar(0)) || !(isl_peak_gain > Scalar(0)))
      throw std::invalid_argument("RfParams: powers, bandwidths and gains must be positive");
    if (pathloss_nlos < pathloss_los)
      throw std::invalid_argument("RfParams: NLoS exponent must be >= LoS exponent");
  }
};

template <typename Scalar>
std::complex<Scalar> unit_phase(std::mt19937_64& rng) {
  std::uniform_real_distribution<Scalar> uni(Scalar(0), Scalar(2 * M_PI));
  const Scalar phi = uni(rng);
  return {std::cos(phi), std::sin(phi)};
}

/// Zero-mean complex Gaussian with E|g|^2 = variance.
template <typename Scalar>
std::complex<Scalar> complex_gaussian(Scalar variance, std::mt19937_64& rng) {
  std::normal_distribution<Scalar> n(Scalar(0), std::sqrt(variance / Scalar(2)));
  const Scalar re = n(rng);
  const Scalar im = n(rng);
  return {re, im};
}

/// Rician fading coefficient over distance dist_m: LoS component with unit
/// modulus and random phase plus a complex-Gaussian NLoS component, each with
/// its own path-loss exponent. Used for user-UAV and satellite-cloud links.
template <typename Scalar>
std::complex<Scalar> rician_gain(Scalar dist_m, const RfParams<Scalar>& rf, std::mt19937_64& rng,
                                 Scalar rician_factor) {
  if (!(dist_m > Scalar(0))) throw std::invalid_argument("rician_gain: distance must be positive");
  const Scalar xi = rician_factor;
  const std::complex<Scalar> los =
      unit_phase<Scalar>(rng) * std::pow(dist_m, -rf.pathloss_los / Scalar(2));
  const std::complex<Scalar> nlos =
      complex_gaussian<Scalar>(Scalar(1), rng) * std::pow(dist_m, -rf.pathloss_nlos / Scalar(2));
  return std::sqrt(xi / (xi + 1)) * los + std::sqrt(Scalar(1) / (xi + 1)) * nlos;
}

template <typename Scalar>
std::complex<Scalar> rician_gain(Scalar dist_m, const RfParams<Scalar>& rf, std::mt19937_64& rng) {
  return rician_gain(dist_m, rf, rng, rf.rician_factor);
}

/// Deterministic beam-limited satellite gain (random antenna phase only).
template <typename Scalar>
std::complex<Scalar> sat_gain_nominal(Scalar dist_m, const RfParams<Scalar>& rf, std::mt19937_64& rng) {
  if (!(dist_m > Scalar(0))) throw std::invalid_argument("sat_gain_nominal: distance must be positive");
  const Scalar mag = std::sqrt(rf.beam_gain) * rf.wavelength_m / (Scalar(4 * M_PI) * dist_m);
  return mag * unit_phase<Scalar>(rng);
}

/// Outdated-CSI satellite gain: the nominal coefficient decorrelated by the
/// zeroth-order Bessel factor of the Doppler-delay product, plus a Gaussian
/// innovation of matching variance.
template <typename Scalar>
std::complex<Scalar> sat_gain_outdated(Scalar dist_m, Scalar delay_s, const RfParams<Scalar>& rf,
                                       std::mt19937_64& rng) {
  const std::complex<Scalar> nominal = sat_gain_nominal(dist_m, rf, rng);
  const Scalar corr = std::cyl_bessel_j(Scalar(0), Scalar(2 * M_PI) * rf.max_doppler_hz * delay_s);
  const Scalar var = std::norm(nominal);
  const std::complex<Scalar> innovation = complex_gaussian<Scalar>(var, rng);
  return corr * nominal + std::sqrt(std::max(Scalar(0), Scalar(1) - corr * corr)) * innovation;
}

/// Shannon rate with co-tier interference: own link at column `self` of
/// `gains`, every other entry interferes at the same transmit power.
template <typename Scalar, typename Derived>
Scalar sinr_rate(Eigen::Index self, const Eigen::MatrixBase<Derived>& gains_sq, Scalar tx_power_w,
                 Scalar noise_w, Scalar bandwidth_hz) {
  const Scalar interference = tx_power_w * (gains_sq.sum() - gains_sq(self));
  const Scalar sinr = tx_power_w * gains_sq(self) / (interference + noise_w);
  return bandwidth_hz * std::log2(Scalar(1) + sinr);
}

/// Uplink rate user m -> UAV, with all other ground users as interferers.
/// `gains_sq(a)` holds |h_{a n}|^2 for every ground user a.
template <typename Scalar, typename Derived>
Scalar uplink_rate_user_uav(Eigen::Index m, const Eigen::MatrixBase<Derived>& gains_sq,
                            const RfParams<Scalar>& rf) {
  return sinr_rate(m, gains_sq, rf.tx_power_user_w, rf.noise_power_w, rf.bandwidth_user_uav_hz);
}

/// Uplink rate UAV n -> satellite, with all other UAVs as interferers.
template <typename Scalar, typename Derived>
Scalar uplink_rate_uav_sat(Eigen::Index n, const Eigen::MatrixBase<Derived>& gains_sq,
                           const RfParams<Scalar>& rf) {
  return sinr_rate(n, gains_sq, rf.tx_power_uav_w, rf.noise_power_w, rf.bandwidth_uav_sat_hz);
}

/// Interference-free inter-satellite link rate at distance dist_m.
template <typename Scalar>
Scalar isl_rate(Scalar dist_m, const RfParams<Scalar>& rf) {
  if (!(dist_m > Scalar(0))) throw std::invalid_argument("isl_rate: distance must be positive");
  const Scalar spreading =
      std::pow(Scalar(4 * M_PI) * dist_m * rf.carrier_freq_sat_hz / rf.light_speed_mps, Scalar(2));
  const Scalar snr = rf.tx_power_sat_w * rf.isl_peak_gain * rf.isl_peak_gain /
                     (rf.boltzmann * rf.thermal_noise_k * rf.bandwidth_isl_hz * spreading);
  return rf.bandwidth_isl_hz * std::log2(Scalar(1) + snr);
}

/// Satellite -> cloud feeder rate for a given channel coefficient.
template <typename Scalar>
Scalar sat_cloud_rate(std::complex<Scalar> gain, const RfParams<Scalar>& rf) {
  const Scalar snr = rf.tx_power_sat_w * std::norm(gain) / rf.noise_power_w;
  return rf.bandwidth_sat_cloud_hz * std::log2(Scalar(1) + snr);
}

}  // namespace sagmec
