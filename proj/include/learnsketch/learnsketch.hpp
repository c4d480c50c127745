#pragma once

#include "learnsketch/bench.hpp"
#include "learnsketch/count_sketch.hpp"
#include "learnsketch/datagen.hpp"
#include "learnsketch/dense_matrix.hpp"
#include "learnsketch/evaluation.hpp"
#include "learnsketch/frequency.hpp"
#include "learnsketch/frequent_directions.hpp"
#include "learnsketch/io.hpp"
#include "learnsketch/learned_sketch.hpp"
#include "learnsketch/linalg.hpp"
#include "learnsketch/misra_gries.hpp"
#include "learnsketch/oracles.hpp"
#include "learnsketch/random.hpp"
#include "learnsketch/space.hpp"
