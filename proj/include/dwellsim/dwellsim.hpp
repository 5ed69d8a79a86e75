#pragma once

#include "dwellsim/types.hpp"
#include "dwellsim/rng.hpp"
#include "dwellsim/geometry.hpp"
#include "dwellsim/plant.hpp"
#include "dwellsim/estimator.hpp"
#include "dwellsim/controller.hpp"
#include "dwellsim/supervisor.hpp"
#include "dwellsim/trajectory.hpp"
#include "dwellsim/scenario.hpp"
#include "dwellsim/engine.hpp"
#include "dwellsim/config.hpp"
#include "dwellsim/io.hpp"
