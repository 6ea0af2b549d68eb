#pragma once

// Umbrella header for the full library.

#include "peaky/analysis.hpp"
#include "peaky/automaton.hpp"
#include "peaky/bignum.hpp"
#include "peaky/counting.hpp"
#include "peaky/enumerate.hpp"
#include "peaky/errors.hpp"
#include "peaky/experiment.hpp"
#include "peaky/landscape.hpp"
#include "peaky/losses.hpp"
#include "peaky/models.hpp"
#include "peaky/oracle.hpp"
#include "peaky/signals.hpp"
#include "peaky/topology.hpp"
#include "peaky/training.hpp"
#include "peaky/util.hpp"
#include "peaky/verify.hpp"
