#pragma once

#include "homesim/cohort.hpp"
#include "homesim/config.hpp"
#include "homesim/error.hpp"
#include "homesim/experiment.hpp"
#include "homesim/household.hpp"
#include "homesim/metrics.hpp"
#include "homesim/output.hpp"
#include "homesim/random.hpp"
#include "homesim/rules.hpp"
#include "homesim/scenario.hpp"
