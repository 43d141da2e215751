#pragma once

#include "perfsim/error.hpp"
#include "perfsim/vertex.hpp"
#include "perfsim/interval.hpp"
#include "perfsim/rng.hpp"
#include "perfsim/spin_config.hpp"
#include "perfsim/interaction.hpp"
#include "perfsim/region_sequence.hpp"
#include "perfsim/lambda_distribution.hpp"
#include "perfsim/sequence_optimizer.hpp"
#include "perfsim/weighted_set.hpp"
#include "perfsim/set_chain.hpp"
#include "perfsim/perfect_sampler.hpp"
#include "perfsim/extinction.hpp"
#include "perfsim/exact_oracle.hpp"
#include "perfsim/model_io.hpp"
#include "perfsim/cli_runner.hpp"
