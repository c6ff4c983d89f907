#pragma once

#include "demonlab/errors.hpp"
#include "demonlab/info_theory.hpp"
#include "demonlab/coding.hpp"
#include "demonlab/rng.hpp"
#include "demonlab/demon_state.hpp"
#include "demonlab/engine.hpp"
#include "demonlab/demon.hpp"
#include "demonlab/policy_search.hpp"
#include "demonlab/harness.hpp"
