/*!
 * This file is part of rcrdesign, a library for optimal group-size allocation
 * in two-treatment-group random coefficient regression models.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE in the project root.
 */
#pragma once

#include "rcr/criteria.hpp"
#include "rcr/csv.hpp"
#include "rcr/estimation.hpp"
#include "rcr/mixed_model.hpp"
#include "rcr/model.hpp"
#include "rcr/simulate.hpp"
#include "rcr/sweep.hpp"
