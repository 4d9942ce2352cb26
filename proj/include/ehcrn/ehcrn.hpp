#pragma once

#include "ehcrn/agent.hpp"
#include "ehcrn/baselines.hpp"
#include "ehcrn/config.hpp"
#include "ehcrn/environment.hpp"
#include "ehcrn/error.hpp"
#include "ehcrn/experiment.hpp"
#include "ehcrn/network.hpp"
#include "ehcrn/random.hpp"
#include "ehcrn/scenario.hpp"
#include "ehcrn/stats.hpp"
