#pragma once

#include "errors.hpp"
#include "rng.hpp"
#include "tree.hpp"
#include "bars.hpp"
#include "meander.hpp"
#include "permutation.hpp"
#include "useful_bars.hpp"
#include "renewal.hpp"
#include "quadrature.hpp"
#include "bounds.hpp"
#include "stats.hpp"
#include "experiments.hpp"
#include "commands.hpp"
