#pragma once

#include "sqmean/analysis.hpp"
#include "sqmean/common.hpp"
#include "sqmean/distribution.hpp"
#include "sqmean/estimators.hpp"
#include "sqmean/hard_instances.hpp"
#include "sqmean/io.hpp"
#include "sqmean/linalg.hpp"
#include "sqmean/norms.hpp"
#include "sqmean/oracle.hpp"
