#pragma once

#include "ncvr/optim/config.hpp"
#include "ncvr/optim/gd.hpp"
#include "ncvr/optim/oracle.hpp"
#include "ncvr/optim/projection.hpp"
#include "ncvr/optim/saga.hpp"
#include "ncvr/optim/svrg.hpp"
#include "ncvr/optim/trace.hpp"
