#pragma once

// Umbrella header.

#include "cte/core.hpp"
#include "cte/random.hpp"
#include "cte/parallel.hpp"
#include "cte/quadrature.hpp"
#include "cte/intensity.hpp"
#include "cte/models.hpp"
#include "cte/simulate.hpp"
#include "cte/pathmeasure.hpp"
#include "cte/coarse.hpp"
#include "cte/estimators.hpp"
#include "cte/figures.hpp"
#include "cte/io.hpp"
