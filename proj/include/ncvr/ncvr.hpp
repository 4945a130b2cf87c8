#pragma once

#include "ncvr/datagen.hpp"
#include "ncvr/dataset.hpp"
#include "ncvr/errors.hpp"
#include "ncvr/landscape.hpp"
#include "ncvr/linalg.hpp"
#include "ncvr/losses.hpp"
#include "ncvr/optim.hpp"
#include "ncvr/version.hpp"

// The harness needs nlohmann/json on the include path (vendor/).
#include "ncvr/harness/experiment.hpp"
#include "ncvr/harness/io.hpp"
#include "ncvr/harness/search.hpp"
