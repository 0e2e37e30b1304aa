#pragma once

#include "nca/core.hpp"
#include "nca/rng.hpp"
#include "nca/perception.hpp"
#include "nca/adaptation.hpp"
#include "nca/dynamics.hpp"
#include "nca/scale.hpp"
#include "nca/io.hpp"
#include "nca/analysis/range.hpp"
#include "nca/analysis/resize.hpp"
#include "nca/analysis/texture_distance.hpp"
#include "nca/analysis/sweep.hpp"
#include "nca/analysis/fixed_point.hpp"
#include "nca/analysis/lyapunov.hpp"
