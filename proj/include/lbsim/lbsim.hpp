#pragma once

// Discrete-time load-balancing simulator and policy-analysis toolkit.

#include "lbsim/baseline.hpp"
#include "lbsim/certify.hpp"
#include "lbsim/core.hpp"
#include "lbsim/metrics.hpp"
#include "lbsim/policies.hpp"
#include "lbsim/rational.hpp"
#include "lbsim/rng.hpp"
#include "lbsim/sim.hpp"
#include "lbsim/stochastic.hpp"
#include "lbsim/tilt.hpp"
