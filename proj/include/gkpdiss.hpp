#pragma once

#include "gkpdiss/error.hpp"
#include "gkpdiss/fock.hpp"
#include "gkpdiss/expm.hpp"
#include "gkpdiss/hermite.hpp"
#include "gkpdiss/gkp.hpp"
#include "gkpdiss/lindblad.hpp"
#include "gkpdiss/integrate.hpp"
#include "gkpdiss/evolve.hpp"
#include "gkpdiss/analysis.hpp"
