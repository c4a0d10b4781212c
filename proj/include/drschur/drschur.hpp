#pragma once

// Umbrella header for the library (the command layer in cli.hpp is not
// included; it pulls in nlohmann/json).

#include "drschur/errors.hpp"
#include "drschur/linalg.hpp"
#include "drschur/pole.hpp"
#include "drschur/oracle.hpp"
#include "drschur/problem.hpp"
#include "drschur/assign.hpp"
#include "drschur/metrics.hpp"
#include "drschur/feedback_io.hpp"
#include "drschur/bench.hpp"
