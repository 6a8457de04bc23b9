#pragma once

#include "sdar/error.hpp"
#include "sdar/glm.hpp"
#include "sdar/libsvm.hpp"
#include "sdar/oracle.hpp"
#include "sdar/path.hpp"
#include "sdar/rng.hpp"
#include "sdar/simulate.hpp"
#include "sdar/solver.hpp"
