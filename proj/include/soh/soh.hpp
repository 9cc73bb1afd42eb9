/// @file soh.hpp
/// @brief Umbrella header for the annulus SOH library.
#pragma once

#include "soh/core.hpp"
#include "soh/bessel.hpp"
#include "soh/tridiagonal.hpp"
#include "soh/spectral.hpp"
#include "soh/linear.hpp"
#include "soh/nonlinear.hpp"
#include "soh/diagnostics.hpp"
#include "soh/io.hpp"
