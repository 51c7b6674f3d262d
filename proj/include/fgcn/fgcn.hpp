#pragma once

// Umbrella header for the whole library.

#include "fgcn/autodiff.hpp"
#include "fgcn/graph.hpp"
#include "fgcn/kernel_analysis.hpp"
#include "fgcn/matrix.hpp"
#include "fgcn/models.hpp"
#include "fgcn/pipeline.hpp"
#include "fgcn/rng.hpp"
