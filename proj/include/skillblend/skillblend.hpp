#pragma once

#include "skillblend/agents.hpp"
#include "skillblend/classifiers.hpp"
#include "skillblend/config.hpp"
#include "skillblend/core.hpp"
#include "skillblend/dataio.hpp"
#include "skillblend/defaults.hpp"
#include "skillblend/distmath.hpp"
#include "skillblend/moderator.hpp"
#include "skillblend/orchestrator.hpp"
#include "skillblend/seeds.hpp"
#include "skillblend/stats.hpp"
#include "skillblend/text.hpp"
#include "skillblend/validation.hpp"
