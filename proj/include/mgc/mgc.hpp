#pragma once

#include "mgc/core.hpp"
#include "mgc/sphere.hpp"
#include "mgc/profile.hpp"
#include "mgc/semitrough.hpp"
#include "mgc/grid.hpp"
#include "mgc/discrete_gauss.hpp"
#include "mgc/barriers.hpp"
#include "mgc/elliptic.hpp"
#include "mgc/flow.hpp"
#include "mgc/diagnostics.hpp"
#include "mgc/exhaust.hpp"
#include "mgc/report.hpp"
