#pragma once

#include "ppa/basis_adaptation.hpp"
#include "ppa/bench_models.hpp"
#include "ppa/density.hpp"
#include "ppa/error.hpp"
#include "ppa/gauss_newton.hpp"
#include "ppa/harness.hpp"
#include "ppa/input_transforms.hpp"
#include "ppa/io.hpp"
#include "ppa/linalg.hpp"
#include "ppa/multiindex.hpp"
#include "ppa/pce.hpp"
#include "ppa/ppr.hpp"
#include "ppa/pursuit_adaptation.hpp"
#include "ppa/quadrature.hpp"
#include "ppa/random.hpp"
