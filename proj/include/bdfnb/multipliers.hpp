#pragma once

#include "bdfnb/fields.hpp"
#include "bdfnb/params.hpp"

namespace bdfnb {

enum class MultiplierSymbol {
  grad_abs,        // |nabla|^s
  free_dirac_abs,  // |D0|^s = E(p)^s
  cut_dirac_half,  // |bold D|^{1/2}, s ignored
  cut_dirac_abs,   // |bold D|^s
  free_energy_inv, // E(p)^{-1}, s ignored
};

// Scalar value of the Fourier multiplier at |p|^2. A negative power of |nabla| is set to 0 at p = 0.
double multiplier_value(MultiplierSymbol sym, double s, double p2, const ModelParams& params);

// Applies a diagonal Fourier multiplier; s must lie in [-2, 2].
SpinorField fractional_multiplier(const SpinorField& psi, MultiplierSymbol sym, double s, const ModelParams& params);
CVec fractional_multiplier(const GridPtr& g, const CVec& f, MultiplierSymbol sym, double s, const ModelParams& params);

// <M psi, psi> evaluated in Fourier space.
double multiplier_expectation(const SpinorField& psi, MultiplierSymbol sym, double s, const ModelParams& params);

}  // namespace bdfnb
