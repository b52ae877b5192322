#pragma once

#include "attnswitch/error.hpp"
#include "attnswitch/rng.hpp"
#include "attnswitch/task_domain.hpp"
#include "attnswitch/exact_planner.hpp"
#include "attnswitch/human_model.hpp"
#include "attnswitch/belief.hpp"
#include "attnswitch/mdp.hpp"
#include "attnswitch/assist_pomdp.hpp"
#include "attnswitch/policies.hpp"
#include "attnswitch/sim_harness.hpp"
#include "attnswitch/stats.hpp"
#include "attnswitch/experiment.hpp"
