#pragma once

#include "l1dl/coeff_models.hpp"
#include "l1dl/csv.hpp"
#include "l1dl/dictionary.hpp"
#include "l1dl/dl_bcd.hpp"
#include "l1dl/errors.hpp"
#include "l1dl/experiments.hpp"
#include "l1dl/identifiability.hpp"
#include "l1dl/quadrature.hpp"
#include "l1dl/rng.hpp"
#include "l1dl/sharpness.hpp"
#include "l1dl/subproblem.hpp"
