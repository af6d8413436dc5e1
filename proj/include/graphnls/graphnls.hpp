#pragma once

#include "graphnls/rational.hpp"
#include "graphnls/graph.hpp"
#include "graphnls/field.hpp"
#include "graphnls/rearrangement.hpp"
#include "graphnls/ode.hpp"
#include "graphnls/waves.hpp"
#include "graphnls/gn_constants.hpp"
#include "graphnls/thresholds.hpp"
#include "graphnls/solver.hpp"
#include "graphnls/constructions.hpp"
#include "graphnls/scan.hpp"
#include "graphnls/io.hpp"
