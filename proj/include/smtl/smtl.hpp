#pragma once

#include "smtl/csv.hpp"
#include "smtl/error.hpp"
#include "smtl/local_search.hpp"
#include "smtl/metrics.hpp"
#include "smtl/mip.hpp"
#include "smtl/objective.hpp"
#include "smtl/oracle.hpp"
#include "smtl/rng.hpp"
#include "smtl/simulate.hpp"
#include "smtl/solver.hpp"
#include "smtl/threads.hpp"
#include "smtl/tuning.hpp"
#include "smtl/types.hpp"
