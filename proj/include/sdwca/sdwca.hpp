#pragma once

#include "sdwca/geo_graph.hpp"
#include "sdwca/mobility.hpp"
#include "sdwca/phy.hpp"
#include "sdwca/weighting.hpp"
#include "sdwca/message.hpp"
#include "sdwca/protocol.hpp"
#include "sdwca/config.hpp"
#include "sdwca/trace.hpp"
#include "sdwca/reporting.hpp"
#include "sdwca/engine.hpp"
