#pragma once

// Umbrella header for the effective-capacity toolkit.

#include "effcap/errors.hpp"
#include "effcap/finite_time.hpp"
#include "effcap/harq.hpp"
#include "effcap/mc.hpp"
#include "effcap/rate_opt.hpp"
#include "effcap/renewal.hpp"
#include "effcap/reward.hpp"
#include "effcap/special.hpp"
