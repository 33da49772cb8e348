#pragma once

#include "arir/asdm.hpp"
#include "arir/doa.hpp"
#include "arir/dsp.hpp"
#include "arir/extrapolation.hpp"
#include "arir/grid.hpp"
#include "arir/interpolation.hpp"
#include "arir/io.hpp"
#include "arir/localization.hpp"
#include "arir/matching.hpp"
#include "arir/oracle.hpp"
#include "arir/peaks.hpp"
#include "arir/pipeline.hpp"
#include "arir/renderer.hpp"
#include "arir/sh.hpp"
#include "arir/third_octave.hpp"
#include "arir/types.hpp"
