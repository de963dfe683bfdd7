#pragma once

#include "leakaudit/core.hpp"
#include "leakaudit/interchange.hpp"
#include "leakaudit/sat/solver.hpp"
#include "leakaudit/encode.hpp"
#include "leakaudit/sat_bridge.hpp"
#include "leakaudit/explain.hpp"
#include "leakaudit/audit.hpp"
#include "leakaudit/oracle.hpp"
#include "leakaudit/genbench.hpp"
