#pragma once

// Finite-time stability analysis and state-feedback synthesis for linear
// discrete time-varying stochastic systems with multiplicative noise.

#include "fts/cli.hpp"
#include "fts/gramian.hpp"
#include "fts/io.hpp"
#include "fts/kron.hpp"
#include "fts/lmi.hpp"
#include "fts/model.hpp"
#include "fts/sdp.hpp"
#include "fts/sim.hpp"
