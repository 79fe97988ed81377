#pragma once

#include "cirbo/benchmarks.hpp"
#include "cirbo/bo_loop.hpp"
#include "cirbo/config.hpp"
#include "cirbo/domain.hpp"
#include "cirbo/dpp.hpp"
#include "cirbo/errors.hpp"
#include "cirbo/exact_gp.hpp"
#include "cirbo/hyperparameters.hpp"
#include "cirbo/io.hpp"
#include "cirbo/kernel.hpp"
#include "cirbo/linalg.hpp"
#include "cirbo/maxvalue.hpp"
#include "cirbo/normal.hpp"
#include "cirbo/placement.hpp"
#include "cirbo/rng.hpp"
#include "cirbo/sparse_gp.hpp"
#include "cirbo/thompson.hpp"
