#pragma once

#include "hilbert.hpp"
#include "gauge.hpp"
#include "oracles.hpp"
#include "evolve.hpp"
#include "hardware.hpp"
#include "mps.hpp"
