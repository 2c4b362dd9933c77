#pragma once

#include "semiconf/analysis.hpp"
#include "semiconf/compiler.hpp"
#include "semiconf/core.hpp"
#include "semiconf/expr.hpp"
#include "semiconf/gadgets.hpp"
#include "semiconf/json_io.hpp"
#include "semiconf/polynomial.hpp"
#include "semiconf/random.hpp"
#include "semiconf/render.hpp"
#include "semiconf/solver.hpp"
