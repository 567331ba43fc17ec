#pragma once

#include "error.hpp"
#include "curve_spec.hpp"
#include "chart.hpp"
#include "p1_kernel.hpp"
#include "theta_core.hpp"
#include "periods.hpp"
#include "gen_theta.hpp"
#include "contour.hpp"
#include "polyroots.hpp"
#include "abel_harness.hpp"
