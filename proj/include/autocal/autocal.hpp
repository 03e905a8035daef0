#pragma once

#include "core_model.hpp"
#include "event_engine.hpp"
#include "identifier.hpp"
#include "layout_designer.hpp"
#include "layout_optimizer.hpp"
#include "validation.hpp"
#include "wind_simulator.hpp"
