#pragma once

#include "sketchlab/matrix.hpp"
#include "sketchlab/rng.hpp"
#include "sketchlab/stats.hpp"
#include "sketchlab/linalg.hpp"
#include "sketchlab/ensembles.hpp"
#include "sketchlab/sketch.hpp"
#include "sketchlab/divergence.hpp"
#include "sketchlab/distinguisher.hpp"

#define SKETCHLAB_VERSION "0.1.0"
