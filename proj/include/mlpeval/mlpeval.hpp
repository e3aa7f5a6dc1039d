#pragma once

#include "mlpeval/data.hpp"
#include "mlpeval/error.hpp"
#include "mlpeval/harness.hpp"
#include "mlpeval/matrix.hpp"
#include "mlpeval/metrics.hpp"
#include "mlpeval/network.hpp"
#include "mlpeval/random.hpp"
#include "mlpeval/training.hpp"
