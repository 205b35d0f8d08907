#pragma once

#include "seqstop/analysis.hpp"
#include "seqstop/errors.hpp"
#include "seqstop/estimators.hpp"
#include "seqstop/model.hpp"
#include "seqstop/montecarlo.hpp"
#include "seqstop/output.hpp"
#include "seqstop/quadrature.hpp"
#include "seqstop/random.hpp"
#include "seqstop/special.hpp"
