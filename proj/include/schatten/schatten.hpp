#pragma once

// Convenience header pulling in the whole library.

#include "schatten/experiment.hpp"
#include "schatten/norms.hpp"
#include "schatten/rng.hpp"
#include "schatten/solvers.hpp"
#include "schatten/spectral.hpp"
#include "schatten/tensor.hpp"
#include "schatten/tensor_io.hpp"
