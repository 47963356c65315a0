#pragma once

// Umbrella header for the retrieval-augmented tree-search engine.

#include "armcts/appconfig.hpp"
#include "armcts/common.hpp"
#include "armcts/core.hpp"
#include "armcts/corpus.hpp"
#include "armcts/embedding.hpp"
#include "armcts/generator.hpp"
#include "armcts/harness.hpp"
#include "armcts/index.hpp"
#include "armcts/mcts.hpp"
#include "armcts/prm.hpp"
#include "armcts/remote.hpp"
#include "armcts/retrieval.hpp"
#include "armcts/synthetic.hpp"
