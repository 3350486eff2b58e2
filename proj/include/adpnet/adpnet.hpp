#pragma once

#include "core.hpp"
#include "measure.hpp"
#include "network.hpp"
#include "projection.hpp"
#include "functional.hpp"
#include "inequality.hpp"
#include "perturb.hpp"
#include "solver.hpp"
#include "verify.hpp"
#include "io.hpp"
#include "svg.hpp"
