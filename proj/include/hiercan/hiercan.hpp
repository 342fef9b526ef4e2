#pragma once
// umbrella header

#include "chain.hpp"
#include "coalescent.hpp"
#include "config.hpp"
#include "dichotomy.hpp"
#include "environment.hpp"
#include "forward.hpp"
#include "hiergroup.hpp"
#include "params.hpp"
#include "renorm.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "walkcalc.hpp"
