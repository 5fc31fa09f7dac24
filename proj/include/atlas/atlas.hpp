#pragma once

#include "atlas/cdr.hpp"
#include "atlas/config.hpp"
#include "atlas/core.hpp"
#include "atlas/csv.hpp"
#include "atlas/encounter.hpp"
#include "atlas/network.hpp"
#include "atlas/pipeline.hpp"
#include "atlas/presets.hpp"
#include "atlas/rng.hpp"
#include "atlas/scenario_io.hpp"
#include "atlas/spatial.hpp"
#include "atlas/synthgen.hpp"
#include "atlas/temporal.hpp"
