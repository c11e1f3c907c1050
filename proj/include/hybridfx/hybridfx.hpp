#pragma once

#include "error.hpp"
#include "matrix.hpp"
#include "normal.hpp"
#include "rng.hpp"
#include "serialize.hpp"
#include "simulator.hpp"
#include "stats.hpp"
#include "symbolic.hpp"
#include "timeseries.hpp"
#include "version.hpp"
#include "volprocess.hpp"
