#pragma once

// Umbrella header: the whole library in one include.

#include "haptofv/cli.hpp"
#include "haptofv/config.hpp"
#include "haptofv/csv.hpp"
#include "haptofv/diagnostics.hpp"
#include "haptofv/experiments.hpp"
#include "haptofv/grid.hpp"
#include "haptofv/model.hpp"
#include "haptofv/run.hpp"
#include "haptofv/scheme.hpp"
