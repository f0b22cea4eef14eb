#pragma once

// Umbrella header for the color invariant convolution library.

#include "ciconv/analysis.hpp"
#include "ciconv/color_model.hpp"
#include "ciconv/errors.hpp"
#include "ciconv/fixtures.hpp"
#include "ciconv/illumination.hpp"
#include "ciconv/image.hpp"
#include "ciconv/image_io.hpp"
#include "ciconv/invariance_suite.hpp"
#include "ciconv/invariants.hpp"
#include "ciconv/layer.hpp"
#include "ciconv/metrics.hpp"
#include "ciconv/parallel.hpp"
#include "ciconv/scale_space.hpp"
