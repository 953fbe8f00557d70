#pragma once

#include "parasim/types.hpp"
#include "parasim/em_model.hpp"
#include "parasim/zmatrix_io.hpp"
#include "parasim/channel.hpp"
#include "parasim/circuit.hpp"
#include "parasim/solver.hpp"
#include "parasim/benchmarks.hpp"
#include "parasim/sweep.hpp"
