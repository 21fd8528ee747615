#pragma once

/// Umbrella header for the mdensity library.

#include "mdensity/coefficients.hpp"
#include "mdensity/errors.hpp"
#include "mdensity/forms.hpp"
#include "mdensity/global_density.hpp"
#include "mdensity/grids.hpp"
#include "mdensity/io.hpp"
#include "mdensity/local_density.hpp"
#include "mdensity/parallel.hpp"
#include "mdensity/primes.hpp"
#include "mdensity/sampler.hpp"
#include "mdensity/verify.hpp"
