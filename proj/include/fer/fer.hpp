#pragma once

#include "fer/bidirectional.hpp"
#include "fer/binary_io.hpp"
#include "fer/config.hpp"
#include "fer/confusion.hpp"
#include "fer/conv.hpp"
#include "fer/dataset.hpp"
#include "fer/error.hpp"
#include "fer/experiment.hpp"
#include "fer/fusion.hpp"
#include "fer/fuzzy_tree.hpp"
#include "fer/gabor.hpp"
#include "fer/geometric.hpp"
#include "fer/grid.hpp"
#include "fer/hlda.hpp"
#include "fer/lda.hpp"
#include "fer/linalg.hpp"
#include "fer/matrix.hpp"
#include "fer/pgm.hpp"
#include "fer/scatter.hpp"
#include "fer/svm.hpp"
#include "fer/tracker.hpp"
