#pragma once

#include "mstg/core.hpp"
#include "mstg/eval.hpp"
#include "mstg/index.hpp"
#include "mstg/io.hpp"
#include "mstg/labeled_graph.hpp"
#include "mstg/predicate.hpp"
#include "mstg/search.hpp"
