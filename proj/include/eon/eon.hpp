#pragma once

#include "eon/crosscheck.hpp"
#include "eon/heuristic.hpp"
#include "eon/ilp.hpp"
#include "eon/oracle.hpp"
#include "eon/physics.hpp"
#include "eon/scenario.hpp"
#include "eon/sim.hpp"
#include "eon/spectrum.hpp"
#include "eon/topology.hpp"
