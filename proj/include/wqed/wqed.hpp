#pragma once

#include "wqed/errors.hpp"
#include "wqed/rng.hpp"
#include "wqed/stats.hpp"
#include "wqed/hilbert.hpp"
#include "wqed/model.hpp"
#include "wqed/scattering.hpp"
#include "wqed/spectral.hpp"
#include "wqed/krylov.hpp"
#include "wqed/observables.hpp"
#include "wqed/dynamics.hpp"
#include "wqed/revival.hpp"
#include "wqed/parallel.hpp"
#include "wqed/harness/config.hpp"
#include "wqed/harness/output.hpp"
#include "wqed/harness/presets.hpp"
#include "wqed/harness/run.hpp"
