#pragma once

// Umbrella header: the whole library.

#include "errors.hpp"
#include "tensor.hpp"
#include "metric.hpp"
#include "jet.hpp"
#include "geometry.hpp"
#include "mesh.hpp"
#include "assembly.hpp"
#include "newton.hpp"
#include "continuation.hpp"
#include "verify.hpp"
#include "io.hpp"
