#pragma once

#include "agghoo/bench.hpp"
#include "agghoo/errors.hpp"
#include "agghoo/families.hpp"
#include "agghoo/fixed_lambda.hpp"
#include "agghoo/homotopy.hpp"
#include "agghoo/huber.hpp"
#include "agghoo/jump_reg.hpp"
#include "agghoo/model_select.hpp"
#include "agghoo/path_config.hpp"
#include "agghoo/path_io.hpp"
#include "agghoo/sim_data.hpp"
#include "agghoo/theory_audit.hpp"
