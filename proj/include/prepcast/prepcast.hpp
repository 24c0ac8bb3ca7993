#pragma once

// Umbrella header: the whole toolkit.

#include "prepcast/compose.hpp"
#include "prepcast/errors.hpp"
#include "prepcast/eval.hpp"
#include "prepcast/features.hpp"
#include "prepcast/forest.hpp"
#include "prepcast/json_util.hpp"
#include "prepcast/linear.hpp"
#include "prepcast/mtga.hpp"
#include "prepcast/oracle.hpp"
#include "prepcast/prep.hpp"
#include "prepcast/prng.hpp"
#include "prepcast/procfs.hpp"
#include "prepcast/record.hpp"
#include "prepcast/registry.hpp"
#include "prepcast/repo.hpp"
#include "prepcast/workflow.hpp"
