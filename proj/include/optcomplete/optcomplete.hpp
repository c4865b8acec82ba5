#pragma once

#include "optcomplete/bench.hpp"
#include "optcomplete/drivers.hpp"
#include "optcomplete/evaluator.hpp"
#include "optcomplete/io.hpp"
#include "optcomplete/master_solver.hpp"
#include "optcomplete/parallel.hpp"
#include "optcomplete/rng.hpp"
#include "optcomplete/sampler.hpp"
#include "optcomplete/two_sided.hpp"
#include "optcomplete/types.hpp"
