#pragma once

// Umbrella header.
#include "tabe/types.hpp"
#include "tabe/io.hpp"
#include "tabe/box.hpp"
#include "tabe/occlusion.hpp"
#include "tabe/bbox.hpp"
#include "tabe/target_region.hpp"
#include "tabe/compositor.hpp"
#include "tabe/metrics.hpp"
#include "tabe/trainprep.hpp"
#include "tabe/chunks.hpp"
#include "tabe/wire.hpp"
#include "tabe/backend.hpp"
#include "tabe/config.hpp"
#include "tabe/pipeline.hpp"
#include "tabe/report.hpp"
#include "tabe/synth.hpp"
#include "tabe/mock.hpp"
