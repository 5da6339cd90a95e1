#pragma once

#include "betalab/error.hpp"
#include "betalab/numeric.hpp"
#include "betalab/function.hpp"
#include "betalab/potentials.hpp"
#include "betalab/equilibrium.hpp"
#include "betalab/transport.hpp"
#include "betalab/operators.hpp"
#include "betalab/stats.hpp"
#include "betalab/ensembles.hpp"
#include "betalab/universality.hpp"
#include "betalab/config.hpp"
#include "betalab/io.hpp"
