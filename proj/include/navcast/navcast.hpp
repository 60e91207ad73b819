#pragma once

// Convenience header pulling in the whole library.

#include "navcast/arima.hpp"
#include "navcast/date.hpp"
#include "navcast/error.hpp"
#include "navcast/hybrid.hpp"
#include "navcast/io.hpp"
#include "navcast/linalg.hpp"
#include "navcast/lstm.hpp"
#include "navcast/metrics.hpp"
#include "navcast/optimize.hpp"
#include "navcast/series.hpp"
#include "navcast/synthetic.hpp"
