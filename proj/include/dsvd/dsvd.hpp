#pragma once

// Everything except the experiment layer, which pulls in CLI11.

#include "dsvd/core.hpp"
#include "dsvd/graph.hpp"
#include "dsvd/scene.hpp"
#include "dsvd/consensus.hpp"
#include "dsvd/secular.hpp"
#include "dsvd/oracle.hpp"
#include "dsvd/evd.hpp"
#include "dsvd/svd1.hpp"
#include "dsvd/svd2.hpp"
#include "dsvd/power.hpp"
#include "dsvd/apps/localization.hpp"
#include "dsvd/apps/radar.hpp"
#include "dsvd/apps/roc.hpp"
