#pragma once

#include "platctl/design.hpp"
#include "platctl/normal.hpp"
#include "platctl/joint_dist.hpp"
#include "platctl/mvn.hpp"
#include "platctl/events.hpp"
#include "platctl/power.hpp"
#include "platctl/calibration.hpp"
#include "platctl/parallel.hpp"
#include "platctl/sweep.hpp"
#include "platctl/trial_sim.hpp"
#include "platctl/io.hpp"
