#include "heraldmux/spectral.h"

#include <cmath>
#include <vector>

namespace heraldmux {
namespace {

constexpr double kSpeedOfLightNmGhz = 299792458.0;  // nm * GHz
constexpr int kGridPoints = 801;
constexpr double kGridHalfWidthSigmas = 8.0;

double fwhm_to_sigma(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

}  // namespace

double nm_to_ghz(double bandwidth_nm, double center_nm) {
  return kSpeedOfLightNmGhz * bandwidth_nm / (center_nm * center_nm);
}

double spectral_overlap_factor(const SpectralSpec& spec) {
  spec.validate();
  const double sigma_pump = fwhm_to_sigma(spec.pump_bandwidth_ghz);
  const double sigma_idler = fwhm_to_sigma(spec.idler_filter_bandwidth_ghz);
  const double sigma_pm =
      fwhm_to_sigma(nm_to_ghz(spec.phasematch_bandwidth_nm, spec.center_wavelength_ref_nm));
  const bool filtered = std::isfinite(spec.signal_filter_bandwidth_ghz);
  const double sigma_signal = filtered ? fwhm_to_sigma(spec.signal_filter_bandwidth_ghz) : 0.0;

  // Trapezoid rule on a box of +-8 sigma per axis; both integrands vanish at
  // the edges, where the rule converges exponentially.
  const double pump_step = 2.0 * kGridHalfWidthSigmas * sigma_pump / (kGridPoints - 1);
  const double idler_step = 2.0 * kGridHalfWidthSigmas * sigma_idler / (kGridPoints - 1);
  std::vector<double> pump_detuning(kGridPoints), pump_weight(kGridPoints);
  std::vector<double> idler_detuning(kGridPoints), idler_weight(kGridPoints);
  for (int k = 0; k < kGridPoints; ++k) {
    const double edge = (k == 0 || k == kGridPoints - 1) ? 0.5 : 1.0;
    pump_detuning[k] = -kGridHalfWidthSigmas * sigma_pump + k * pump_step;
    idler_detuning[k] = -kGridHalfWidthSigmas * sigma_idler + k * idler_step;
    pump_weight[k] = edge * std::exp(-0.5 * std::pow(pump_detuning[k] / sigma_pump, 2));
    idler_weight[k] = edge * std::exp(-0.5 * std::pow(idler_detuning[k] / sigma_idler, 2));
  }

  double heralded = 0.0;
  double passed = 0.0;
  for (int p = 0; p < kGridPoints; ++p) {
    for (int i = 0; i < kGridPoints; ++i) {
      const double signal = pump_detuning[p] - idler_detuning[i];
      const double w =
          pump_weight[p] * idler_weight[i] * std::exp(-0.5 * std::pow(signal / sigma_pm, 2));
      heralded += w;
      passed += filtered ? w * std::exp(-0.5 * std::pow(signal / sigma_signal, 2)) : w;
    }
  }
  return passed / heralded;
}

double central_wavelength(double temperature_k, const SpectralSpec& spec) {
  return spec.center_wavelength_ref_nm +
         spec.tuning_slope_nm_per_k * (temperature_k - spec.temperature_ref_k);
}

}  // namespace heraldmux
