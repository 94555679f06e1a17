#pragma once

// Umbrella header: the whole library in one include.

#include "mmc/clustering.hpp"
#include "mmc/error.hpp"
#include "mmc/io.hpp"
#include "mmc/kernel.hpp"
#include "mmc/mapping.hpp"
#include "mmc/metrics.hpp"
#include "mmc/numeric.hpp"
#include "mmc/optimizer.hpp"
