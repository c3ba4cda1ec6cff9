#pragma once

#include "parisian/asymptotics.hpp"
#include "parisian/constants_lab.hpp"
#include "parisian/diagnostics.hpp"
#include "parisian/gaussian_paths.hpp"
#include "parisian/gaussian_tail.hpp"
#include "parisian/grid.hpp"
#include "parisian/models.hpp"
#include "parisian/parisian_estimator.hpp"
#include "parisian/rng.hpp"
#include "parisian/stable_sim.hpp"
#include "parisian/stats.hpp"
