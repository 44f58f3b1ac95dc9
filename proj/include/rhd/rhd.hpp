#pragma once

// Umbrella header for the regularized halfspace depth library.

#include "rhd/depth.hpp"
#include "rhd/directions.hpp"
#include "rhd/error.hpp"
#include "rhd/evalkit.hpp"
#include "rhd/funspace.hpp"
#include "rhd/io.hpp"
#include "rhd/outlier.hpp"
#include "rhd/parallel.hpp"
#include "rhd/random.hpp"
#include "rhd/simlab.hpp"
#include "rhd/version.hpp"
