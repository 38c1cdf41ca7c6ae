#pragma once

#include "onmf/batch.hpp"
#include "onmf/coeff_solver.hpp"
#include "onmf/config.hpp"
#include "onmf/constraints.hpp"
#include "onmf/datagen.hpp"
#include "onmf/divergence.hpp"
#include "onmf/io.hpp"
#include "onmf/matrix.hpp"
#include "onmf/online.hpp"
#include "onmf/rng.hpp"
#include "onmf/stream.hpp"
