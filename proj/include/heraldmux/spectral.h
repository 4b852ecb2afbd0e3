#pragma once

#include "heraldmux/types.h"

namespace heraldmux {

/// Fraction of heralded signal photons that pass the signal filter.
///
/// Pump, idler-filter, signal-filter and phase-matching envelopes are
/// Gaussians with the given FWHM; energy conservation ties the signal detuning
/// to pump minus idler detuning. The phase-matching width is converted from
/// nm to GHz at center_wavelength_ref. An infinite signal bandwidth means no
/// signal filter.
double spectral_overlap_factor(const SpectralSpec& spec);

/// Phase-matched central wavelength at a crystal temperature, linear in T.
double central_wavelength(double temperature_k, const SpectralSpec& spec);

/// Optical bandwidth in GHz of a wavelength interval at a center wavelength.
double nm_to_ghz(double bandwidth_nm, double center_nm);

}  // namespace heraldmux
