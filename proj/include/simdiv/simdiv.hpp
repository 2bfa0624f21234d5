#pragma once

// Umbrella header.

#include "simdiv/common.hpp"
#include "simdiv/rng.hpp"
#include "simdiv/similarity.hpp"
#include "simdiv/diversity.hpp"
#include "simdiv/spectral.hpp"
#include "simdiv/optimize.hpp"
#include "simdiv/bounds.hpp"
#include "simdiv/sweep.hpp"
#include "simdiv/io.hpp"
