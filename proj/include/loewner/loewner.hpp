#pragma once

// Bernstein functions, Bernstein generators, and the evolution families
// they generate on the right half-plane.

#include "loewner/bernstein.hpp"
#include "loewner/branching.hpp"
#include "loewner/errors.hpp"
#include "loewner/evolution.hpp"
#include "loewner/flow.hpp"
#include "loewner/generator.hpp"
#include "loewner/measure.hpp"
#include "loewner/numerics.hpp"
#include "loewner/serialization.hpp"
