#pragma once

// Umbrella header.

#include "exactrng/ratio.hpp"
#include "exactrng/bigfloat.hpp"
#include "exactrng/process.hpp"
#include "exactrng/markov.hpp"
#include "exactrng/interval_alg.hpp"
#include "exactrng/analysis.hpp"
#include "exactrng/bounds.hpp"
#include "exactrng/sim.hpp"
#include "exactrng/io.hpp"
