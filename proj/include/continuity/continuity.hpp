#pragma once

// Umbrella header: the full library.

#include "continuity/convergence.hpp"
#include "continuity/errors.hpp"
#include "continuity/integrators.hpp"
#include "continuity/linalg.hpp"
#include "continuity/mlp.hpp"
#include "continuity/rng.hpp"
#include "continuity/sindy.hpp"
#include "continuity/systems.hpp"
#include "continuity/theory.hpp"
#include "continuity/training.hpp"
#include "continuity/trajectory.hpp"
#include "continuity/vector_field.hpp"
