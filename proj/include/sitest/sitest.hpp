#pragma once

// Umbrella header for the library (the CLI lives in sitest/cli.hpp).
#include "sitest/core_data.hpp"
#include "sitest/csv.hpp"
#include "sitest/empirical_process.hpp"
#include "sitest/errors.hpp"
#include "sitest/grid_config.hpp"
#include "sitest/index_estimation.hpp"
#include "sitest/limit_distribution.hpp"
#include "sitest/mc_harness.hpp"
#include "sitest/partition.hpp"
#include "sitest/rng.hpp"
#include "sitest/simulation.hpp"
