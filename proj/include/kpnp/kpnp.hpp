#pragma once

#include "kpnp/bounds.hpp"
#include "kpnp/cg.hpp"
#include "kpnp/common.hpp"
#include "kpnp/config.hpp"
#include "kpnp/dense.hpp"
#include "kpnp/denoiser.hpp"
#include "kpnp/experiment.hpp"
#include "kpnp/forward.hpp"
#include "kpnp/image.hpp"
#include "kpnp/linop.hpp"
#include "kpnp/operators.hpp"
#include "kpnp/pgm.hpp"
#include "kpnp/solver.hpp"
#include "kpnp/spectral.hpp"
