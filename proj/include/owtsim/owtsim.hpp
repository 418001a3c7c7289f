#pragma once

// Umbrella header for the owtsim library.

#include "owtsim/chain.hpp"
#include "owtsim/common.hpp"
#include "owtsim/config.hpp"
#include "owtsim/csv.hpp"
#include "owtsim/discretization.hpp"
#include "owtsim/dynamics.hpp"
#include "owtsim/fdd.hpp"
#include "owtsim/frustum.hpp"
#include "owtsim/loadcases.hpp"
#include "owtsim/morison.hpp"
#include "owtsim/sea.hpp"
#include "owtsim/simulate.hpp"
#include "owtsim/soil.hpp"
#include "owtsim/spatial.hpp"
#include "owtsim/spectral.hpp"
#include "owtsim/station.hpp"
