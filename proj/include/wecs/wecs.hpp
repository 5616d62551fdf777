// Umbrella header for the wind energy conversion system simulator.
#pragma once

#include <wecs/aero.hpp>
#include <wecs/common.hpp>
#include <wecs/csv.hpp>
#include <wecs/drivetrain.hpp>
#include <wecs/engine.hpp>
#include <wecs/geometry.hpp>
#include <wecs/grid.hpp>
#include <wecs/machine.hpp>
#include <wecs/scenario_json.hpp>
#include <wecs/spectral.hpp>
#include <wecs/windfield.hpp>
