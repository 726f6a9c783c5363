#pragma once

// Umbrella header.

#include "infogeo/errors.hpp"
#include "infogeo/grid.hpp"
#include "infogeo/elliptic.hpp"
#include "infogeo/random_fields.hpp"
#include "infogeo/score.hpp"
#include "infogeo/lanczos.hpp"
#include "infogeo/spectral.hpp"
#include "infogeo/ode.hpp"
#include "infogeo/transport.hpp"
#include "infogeo/regression.hpp"
#include "infogeo/experiments.hpp"
#include "infogeo/config.hpp"
#include "infogeo/io.hpp"
#include "infogeo/runner.hpp"

namespace infogeo {
inline constexpr const char* kVersion = "0.1.0";
}
