#pragma once

#include "srs/budget.hpp"
#include "srs/chain.hpp"
#include "srs/config.hpp"
#include "srs/constants.hpp"
#include "srs/errors.hpp"
#include "srs/fft.hpp"
#include "srs/frontend.hpp"
#include "srs/model.hpp"
#include "srs/noise.hpp"
#include "srs/reports.hpp"
#include "srs/rng.hpp"
#include "srs/spectral_density.hpp"
#include "srs/timesim.hpp"
