#pragma once

// Umbrella header: the whole library.

#include "steerkit/adjoint.hpp"
#include "steerkit/cli.hpp"
#include "steerkit/config.hpp"
#include "steerkit/control_set.hpp"
#include "steerkit/descent.hpp"
#include "steerkit/dual.hpp"
#include "steerkit/dynamics.hpp"
#include "steerkit/ensemble.hpp"
#include "steerkit/gradstep.hpp"
#include "steerkit/jet.hpp"
#include "steerkit/ladder.hpp"
#include "steerkit/lambda.hpp"
#include "steerkit/linalg.hpp"
#include "steerkit/output.hpp"
#include "steerkit/parallel.hpp"
#include "steerkit/policy.hpp"
#include "steerkit/rng.hpp"
#include "steerkit/snapshot.hpp"
#include "steerkit/suites.hpp"
#include "steerkit/target_field.hpp"
#include "steerkit/target_map.hpp"
#include "steerkit/testkit.hpp"
#include "steerkit/verify.hpp"
