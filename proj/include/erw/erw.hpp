#pragma once

// Everything except the command-line layer.

#include "erw/analytics.hpp"
#include "erw/error.hpp"
#include "erw/model.hpp"
#include "erw/montecarlo.hpp"
#include "erw/oracle.hpp"
#include "erw/pmf.hpp"
#include "erw/random.hpp"
#include "erw/report_io.hpp"
#include "erw/stat_tests.hpp"
#include "erw/verify.hpp"
