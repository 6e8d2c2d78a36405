#pragma once

#include "ltrc/ars.hpp"
#include "ltrc/bayes.hpp"
#include "ltrc/bootstrap.hpp"
#include "ltrc/data_model.hpp"
#include "ltrc/errors.hpp"
#include "ltrc/intervals.hpp"
#include "ltrc/mle_common.hpp"
#include "ltrc/mle_separate.hpp"
#include "ltrc/numerics.hpp"
#include "ltrc/parallel.hpp"
#include "ltrc/random.hpp"
#include "ltrc/simstudy.hpp"
