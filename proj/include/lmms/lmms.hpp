#pragma once

#include "lmms/box.hpp"
#include "lmms/core.hpp"
#include "lmms/coupling.hpp"
#include "lmms/gh.hpp"
#include "lmms/io.hpp"
#include "lmms/reconstruct.hpp"
#include "lmms/rng.hpp"
#include "lmms/solvers.hpp"
#include "lmms/sprinkle.hpp"
#include "lmms/witness.hpp"
