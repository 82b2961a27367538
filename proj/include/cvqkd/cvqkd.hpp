// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header.

#pragma once

#include "cvqkd/channel.hpp"
#include "cvqkd/constants.hpp"
#include "cvqkd/finite_size.hpp"
#include "cvqkd/format.hpp"
#include "cvqkd/gaussian.hpp"
#include "cvqkd/noise.hpp"
#include "cvqkd/parallel.hpp"
#include "cvqkd/pipeline.hpp"
#include "cvqkd/random.hpp"
#include "cvqkd/rates.hpp"
#include "cvqkd/report.hpp"
#include "cvqkd/scenario.hpp"
#include "cvqkd/simulator.hpp"
#include "cvqkd/special.hpp"
#include "cvqkd/sweep.hpp"
